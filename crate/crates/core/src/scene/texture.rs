use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::Perlin;
use super::Color;

/// Noise shaping applied before the palette lookup.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Composition {
    Identity,
    Sine { a: f64, b: f64 },
    Abs,
    Ridge,
}

impl Composition {
    /// Maps noise in [-1, 1] to a palette coordinate in [0, 1].
    pub fn apply(&self, n: f64) -> f64 {
        match *self {
            Composition::Identity => 0.5 * (n + 1.0),
            Composition::Sine { a, b } => 0.5 * ((a * n + b).sin() + 1.0),
            Composition::Abs => n.abs(),
            Composition::Ridge => {
                let r = 1.0 - n.abs();
                r * r
            }
        }
    }

    fn sample(rng: &mut impl Rng) -> Self {
        match rng.random_range(0..4u32) {
            0 => Composition::Identity,
            1 => Composition::Sine {
                a: rng.random_range(4.0..16.0),
                b: rng.random_range(0.0..std::f64::consts::TAU),
            },
            2 => Composition::Abs,
            _ => Composition::Ridge,
        }
    }
}

/// Two-colour linear palette.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub from: Color,
    pub to: Color,
}

impl Palette {
    pub fn constant(c: Color) -> Self {
        Self { from: c, to: c }
    }

    pub fn at(&self, t: f64) -> Color {
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = self.from[i] + (self.to[i] - self.from[i]) * t;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureParams {
    pub octaves: u32,
    /// Lattice cells across the whole texture at the first octave.
    pub base_frequency: f64,
    pub resolution: u32,
}

impl Default for TextureParams {
    fn default() -> Self {
        Self {
            octaves: 4,
            base_frequency: 4.0,
            resolution: 64,
        }
    }
}

/// Square RGB texture, 8 bits per channel, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextureMap {
    pub resolution: u32,
    pub pixels: Vec<u8>,
    pub seed: u64,
}

pub fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

impl TextureMap {
    pub fn solid(color: Color, resolution: u32) -> Self {
        let px = [to_u8(color[0]), to_u8(color[1]), to_u8(color[2])];
        let n = (resolution * resolution) as usize;
        Self {
            resolution,
            pixels: px.iter().copied().cycle().take(n * 3).collect(),
            seed: 0,
        }
    }

    pub fn texel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.resolution + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Nearest-texel lookup with wrap-around, `u, v` in texture units (1 = full width).
    pub fn sample(&self, u: f64, v: f64) -> [f64; 3] {
        let r = self.resolution as f64;
        let x = ((u * r).floor() as i64).rem_euclid(self.resolution as i64) as u32;
        let y = ((v * r).floor() as i64).rem_euclid(self.resolution as i64) as u32;
        let t = self.texel(x, y);
        [t[0] as f64 / 255.0, t[1] as f64 / 255.0, t[2] as f64 / 255.0]
    }

    pub fn is_uniform(&self) -> bool {
        self.pixels.chunks(3).all(|c| c == &self.pixels[0..3])
    }
}

/// Procedural texture whose composition and palette are drawn from `seed`.
pub fn synthesize_texture(params: &TextureParams, seed: u64, resolution: u32) -> TextureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise_seed: u64 = rng.random();
    let composition = Composition::sample(&mut rng);
    let palette = Palette {
        from: [rng.random(), rng.random(), rng.random()],
        to: [rng.random(), rng.random(), rng.random()],
    };
    let mut tex = synthesize_with(params, noise_seed, resolution, composition, palette);
    tex.seed = seed;
    tex
}

/// Texture with an explicit composition and palette.
pub fn synthesize_with(
    params: &TextureParams,
    noise_seed: u64,
    resolution: u32,
    composition: Composition,
    palette: Palette,
) -> TextureMap {
    assert!(resolution >= 16, "texture resolution must be at least 16");
    let perlin = Perlin::new(noise_seed);
    let r = resolution as f64;
    let mut pixels = Vec::with_capacity((resolution * resolution * 3) as usize);
    for y in 0..resolution {
        for x in 0..resolution {
            let n = perlin.fbm(
                (x as f64 + 0.5) / r,
                (y as f64 + 0.5) / r,
                params.octaves,
                params.base_frequency,
            );
            let c = palette.at(composition.apply(n));
            pixels.extend(c.iter().map(|v| to_u8(*v)));
        }
    }
    TextureMap {
        resolution,
        pixels,
        seed: noise_seed,
    }
}
