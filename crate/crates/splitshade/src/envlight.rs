//! Environment lighting: HDR ingestion and split-sum precomputation.
//!
//! The specular half of the split sum is a mip chain of the environment
//! convolved with the GGX lobe at increasing roughness; the diffuse half is
//! a low-resolution cosine-convolved irradiance map; the BRDF integral is
//! tabulated once into a 2D lookup over (n·v, roughness) as a scale `F1`
//! and bias `F2` on the base reflectance.
//!
//! All maps are equirectangular (width = 2 × height), +y up, with the
//! mapping u = (atan2(x, -z) / 2π + 0.5)·w, v = (acos(y) / π)·h.

use std::path::Path;

use rayon::prelude::*;
use sha2::Digest;

use crate::brdf;
use crate::error::{Error, Result};
use crate::imageio::{self, ImageBuffer};
use crate::rng::Pcg32;
use crate::Vec3;

/// Equirectangular grid of linear RGB radiance.
#[derive(Debug, Clone)]
pub struct EnvironmentMap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Vec3>,
}

impl EnvironmentMap {
    pub fn new(width: usize, height: usize, pixels: Vec<Vec3>) -> Result<Self> {
        if width != 2 * height || height == 0 {
            return Err(Error::Format(format!(
                "equirect map must have width = 2 x height, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::Dimension("pixel count mismatch".into()));
        }
        for p in &pixels {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) || p.min() < 0.0 {
                return Err(Error::Format("radiance must be finite and >= 0".into()));
            }
        }
        Ok(EnvironmentMap {
            width,
            height,
            pixels,
        })
    }

    pub fn constant(width: usize, height: usize, value: Vec3) -> Self {
        EnvironmentMap {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn texel(&self, x: usize, y: usize) -> Vec3 {
        self.pixels[y * self.width + x]
    }

    pub fn set_texel(&mut self, x: usize, y: usize, v: Vec3) {
        self.pixels[y * self.width + x] = v;
    }

    /// Direction of the texel center (x, y).
    pub fn texel_direction(&self, x: usize, y: usize) -> Vec3 {
        texel_to_direction(x as f64 + 0.5, y as f64 + 0.5, self.width, self.height)
    }

    /// Bilinear radiance lookup in a unit direction. Horizontal seam wraps;
    /// v is clamped to texel centers at the poles.
    pub fn sample_direction(&self, dir: Vec3) -> Vec3 {
        let (u, v) = direction_to_texel(dir, self.width, self.height);
        self.sample_texel(u, v)
    }

    /// Bilinear lookup at continuous texel coordinates.
    pub fn sample_texel(&self, u: f64, v: f64) -> Vec3 {
        let h = self.height as f64;
        let v = v.clamp(0.5, h - 0.5);
        let x = u - 0.5;
        let y = v - 0.5;
        let x0 = x.floor();
        let y0 = y.floor().clamp(0.0, h - 1.0);
        let fx = x - x0;
        let fy = (y - y0).clamp(0.0, 1.0);
        let w = self.width as isize;
        let xi = |i: isize| -> usize { (i.rem_euclid(w)) as usize };
        let x0i = xi(x0 as isize);
        let x1i = xi(x0 as isize + 1);
        let y0i = y0 as usize;
        let y1i = (y0i + 1).min(self.height - 1);
        self.texel(x0i, y0i) * (1.0 - fx) * (1.0 - fy)
            + self.texel(x1i, y0i) * fx * (1.0 - fy)
            + self.texel(x0i, y1i) * (1.0 - fx) * fy
            + self.texel(x1i, y1i) * fx * fy
    }

    /// Content hash over dimensions and pixel bytes.
    pub fn content_hash(&self) -> String {
        let mut hasher = sha2::Sha256::new();
        hasher.update((self.width as u64).to_le_bytes());
        hasher.update((self.height as u64).to_le_bytes());
        for p in &self.pixels {
            for c in 0..3 {
                hasher.update(p[c].to_le_bytes());
            }
        }
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_image(&self) -> ImageBuffer {
        let mut data = Vec::with_capacity(self.pixels.len() * 3);
        for p in &self.pixels {
            data.extend_from_slice(&[p.x as f32, p.y as f32, p.z as f32]);
        }
        ImageBuffer::new(self.width, self.height, 3, data).expect("valid by construction")
    }

    pub fn from_image(img: &ImageBuffer) -> Result<Self> {
        let pixels = (0..img.width * img.height)
            .map(|i| {
                let x = i % img.width;
                let y = i / img.width;
                let p = img.pixel(x, y);
                if img.channels == 1 {
                    Vec3::repeat(p[0] as f64)
                } else {
                    Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)
                }
            })
            .collect();
        EnvironmentMap::new(img.width, img.height, pixels)
    }
}

/// Continuous texel coordinates of a unit direction.
pub fn direction_to_texel(dir: Vec3, width: usize, height: usize) -> (f64, f64) {
    let u = (dir.x.atan2(-dir.z) / (2.0 * std::f64::consts::PI) + 0.5) * width as f64;
    let v = dir.y.clamp(-1.0, 1.0).acos() / std::f64::consts::PI * height as f64;
    (u, v)
}

/// Unit direction of continuous texel coordinates (inverse of
/// [`direction_to_texel`] away from the poles).
pub fn texel_to_direction(u: f64, v: f64, width: usize, height: usize) -> Vec3 {
    let phi = (u / width as f64 - 0.5) * 2.0 * std::f64::consts::PI;
    let theta = v / height as f64 * std::f64::consts::PI;
    let sin_t = theta.sin();
    Vec3::new(sin_t * phi.sin(), theta.cos(), -sin_t * phi.cos())
}

/// Load a Radiance `.hdr` or PFM environment map and validate it.
pub fn load_envmap<P: AsRef<Path>>(path: P) -> Result<EnvironmentMap> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let img = match ext.as_str() {
        "hdr" | "pic" => imageio::read_rgbe_file(path)?,
        "pfm" => imageio::read_pfm_file(path)?,
        other => {
            return Err(Error::Format(format!(
                "unsupported environment format {other:?} (expect .hdr or .pfm)"
            )))
        }
    };
    EnvironmentMap::from_image(&img)
}

// ---------------------------------------------------------------------------
// Sampling helpers

/// Any orthonormal tangent frame (t, b) for unit `n`.
pub fn tangent_frame(n: Vec3) -> (Vec3, Vec3) {
    // branchless Frisvad-style construction
    let sign = if n.z >= 0.0 { 1.0 } else { -1.0 };
    let a = -1.0 / (sign + n.z);
    let b = n.x * n.y * a;
    let t = Vec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
    let bt = Vec3::new(b, sign + n.y * n.y * a, -n.y);
    (t, bt)
}

/// Cosine-weighted hemisphere direction in the local +z frame;
/// pdf = cosθ / π.
pub fn sample_cosine_hemisphere(u1: f64, u2: f64) -> Vec3 {
    let r = u1.sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    let (x, y) = (r * phi.cos(), r * phi.sin());
    let z = (1.0 - u1).max(0.0).sqrt();
    Vec3::new(x, y, z)
}

/// GGX-distributed microfacet normal in the local +z frame;
/// pdf over directions = D(h) cosθ_h.
pub fn sample_ggx_half_vector(roughness: f64, u1: f64, u2: f64) -> Vec3 {
    let a = roughness * roughness;
    let a2 = a * a;
    let cos2 = if a2 <= 0.0 {
        1.0
    } else {
        ((1.0 - u1) / (1.0 + (a2 - 1.0) * u1)).clamp(0.0, 1.0)
    };
    let cos_t = cos2.sqrt();
    let sin_t = (1.0 - cos2).max(0.0).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    Vec3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t)
}

/// Lift a local (+z up) vector into the frame of unit normal `n`.
pub fn local_to_world(local: Vec3, n: Vec3) -> Vec3 {
    let (t, b) = tangent_frame(n);
    t * local.x + b * local.y + n * local.z
}

// ---------------------------------------------------------------------------
// Prefiltering

/// Prefilter chain parameters. `base_width` is the level-0 width (height is
/// half that); each level halves the resolution, with roughness mapped
/// linearly over levels: rho_l = l / (levels - 1).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ChainConfig {
    pub levels: usize,
    pub base_width: usize,
    pub spec_samples: usize,
    pub diffuse_width: usize,
    pub diffuse_samples: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            levels: 6,
            base_width: 256,
            spec_samples: 1024,
            diffuse_width: 32,
            diffuse_samples: 4096,
            seed: 0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::Config("prefilter needs at least 2 levels".into()));
        }
        if self.spec_samples < 64 {
            return Err(Error::Config("spec_samples must be >= 64".into()));
        }
        if self.base_width % (1 << (self.levels - 1)) != 0 || self.base_width >> (self.levels - 1) < 8
        {
            return Err(Error::Config(format!(
                "base width {} cannot support {} halving levels (min 8x4)",
                self.base_width, self.levels
            )));
        }
        if self.diffuse_width > 64 || self.diffuse_width < 2 || self.diffuse_width % 2 != 0 {
            return Err(Error::Config("diffuse map width must be even and <= 64".into()));
        }
        Ok(())
    }

    pub fn roughness_for_level(&self, level: usize) -> f64 {
        level as f64 / (self.levels - 1) as f64
    }
}

/// Chain provenance recorded in the JSON sidecar.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ChainMeta {
    pub config: ChainConfig,
    pub source_hash: String,
}

/// Prefiltered environment: specular mip chain plus diffuse irradiance map.
#[derive(Debug, Clone)]
pub struct PrefilteredEnvironment {
    pub specular_mips: Vec<EnvironmentMap>,
    pub diffuse_map: EnvironmentMap,
    pub meta: ChainMeta,
}

/// Convolve the environment with the GGX lobe at each mip's roughness.
/// Level 0 is the mirror limit: a plain bilinear resample of the source.
pub fn prefilter_specular(env: &EnvironmentMap, cfg: &ChainConfig) -> Result<Vec<EnvironmentMap>> {
    cfg.validate()?;
    let mut mips = Vec::with_capacity(cfg.levels);
    for level in 0..cfg.levels {
        let w = cfg.base_width >> level;
        let h = w / 2;
        let rough = cfg.roughness_for_level(level);
        let pixels: Vec<Vec3> = (0..w * h)
            .into_par_iter()
            .map(|idx| {
                let x = idx % w;
                let y = idx / w;
                let d = texel_to_direction(x as f64 + 0.5, y as f64 + 0.5, w, h);
                if rough == 0.0 {
                    env.sample_direction(d)
                } else {
                    filter_texel(env, d, rough, cfg.spec_samples, cfg.seed, level, idx)
                }
            })
            .collect();
        mips.push(EnvironmentMap {
            width: w,
            height: h,
            pixels,
        });
    }
    Ok(mips)
}

/// GGX-weighted average of the source radiance about direction `d`,
/// using the n = v = d convention of the split sum.
fn filter_texel(
    env: &EnvironmentMap,
    d: Vec3,
    roughness: f64,
    samples: usize,
    seed: u64,
    level: usize,
    texel: usize,
) -> Vec3 {
    let mut rng = Pcg32::from_key(seed, &[0x5bec, level as u64, texel as u64]);
    let n = d;
    let v = d;
    let mut acc = Vec3::zeros();
    let mut weight = 0.0f64;
    for _ in 0..samples {
        let (u1, u2) = rng.next_pair();
        let h = local_to_world(sample_ggx_half_vector(roughness, u1, u2), n);
        let l = h * (2.0 * v.dot(&h)) - v;
        let cos_nl = n.dot(&l);
        if cos_nl > 0.0 {
            acc += env.sample_direction(l) * cos_nl;
            weight += cos_nl;
        }
    }
    if weight > 0.0 {
        acc / weight
    } else {
        env.sample_direction(d)
    }
}

/// Cosine-convolved irradiance: the texel for normal n holds
/// ∫ L(ω) (ω·n)/π dω, estimated with cosine-weighted sampling.
pub fn compute_irradiance(
    env: &EnvironmentMap,
    width: usize,
    samples: usize,
    seed: u64,
) -> Result<EnvironmentMap> {
    if width > 64 || width < 2 || width % 2 != 0 {
        return Err(Error::Config("irradiance map width must be even and <= 64".into()));
    }
    let height = width / 2;
    let pixels: Vec<Vec3> = (0..width * height)
        .into_par_iter()
        .map(|idx| {
            let x = idx % width;
            let y = idx / width;
            let n = texel_to_direction(x as f64 + 0.5, y as f64 + 0.5, width, height);
            let mut rng = Pcg32::from_key(seed, &[0xd1ff, idx as u64]);
            let mut acc = Vec3::zeros();
            for _ in 0..samples {
                let (u1, u2) = rng.next_pair();
                let l = local_to_world(sample_cosine_hemisphere(u1, u2), n);
                acc += env.sample_direction(l);
            }
            acc / samples as f64
        })
        .collect();
    Ok(EnvironmentMap {
        width,
        height,
        pixels,
    })
}

impl PrefilteredEnvironment {
    pub fn build(env: &EnvironmentMap, cfg: &ChainConfig) -> Result<Self> {
        let specular_mips = prefilter_specular(env, cfg)?;
        let diffuse_map = compute_irradiance(env, cfg.diffuse_width, cfg.diffuse_samples, cfg.seed)?;
        Ok(PrefilteredEnvironment {
            specular_mips,
            diffuse_map,
            meta: ChainMeta {
                config: cfg.clone(),
                source_hash: env.content_hash(),
            },
        })
    }

    pub fn levels(&self) -> usize {
        self.specular_mips.len()
    }

    /// Diffuse lighting for a surface normal.
    pub fn sample_diffuse(&self, n: Vec3) -> Vec3 {
        self.diffuse_map.sample_direction(n)
    }
}

/// Trilinear lookup: bilinear within the two mip levels bracketing
/// roughness * (levels - 1), linear across them.
pub fn sample_prefiltered(pre: &PrefilteredEnvironment, dir: Vec3, roughness: f64) -> Vec3 {
    let levels = pre.levels();
    let level_f = roughness.clamp(0.0, 1.0) * (levels - 1) as f64;
    let l0 = level_f.floor() as usize;
    let l1 = (l0 + 1).min(levels - 1);
    let t = level_f - l0 as f64;
    let s0 = pre.specular_mips[l0].sample_direction(dir);
    if l1 == l0 || t == 0.0 {
        return s0;
    }
    let s1 = pre.specular_mips[l1].sample_direction(dir);
    s0 * (1.0 - t) + s1 * t
}

// ---------------------------------------------------------------------------
// DFG lookup table

/// Tabulated split-sum BRDF integral: scale `f1` on F0 and bias `f2`,
/// indexed by (n·v, roughness) at cell centers.
#[derive(Debug, Clone)]
pub struct DfgLut {
    pub n_cos: usize,
    pub n_rough: usize,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
}

/// DFG table build parameters.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DfgConfig {
    pub n_cos: usize,
    pub n_rough: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for DfgConfig {
    fn default() -> Self {
        DfgConfig {
            n_cos: 64,
            n_rough: 64,
            samples: 4096,
            seed: 0,
        }
    }
}

/// Integrate the split BRDF term for one (n·v, roughness) pair by GGX
/// half-vector importance sampling. Returns (f1, f2).
pub fn integrate_dfg(cos_nv: f64, roughness: f64, samples: usize, mut rng: Pcg32) -> (f64, f64) {
    let cos_nv = cos_nv.clamp(brdf::COS_EPS, 1.0);
    // n is +z in the local frame; v lies in the xz plane
    let v = Vec3::new((1.0 - cos_nv * cos_nv).max(0.0).sqrt(), 0.0, cos_nv);
    let mut f1 = 0.0f64;
    let mut f2 = 0.0f64;
    for _ in 0..samples {
        let (u1, u2) = rng.next_pair();
        let h = sample_ggx_half_vector(roughness, u1, u2);
        let l = h * (2.0 * v.dot(&h)) - v;
        let cos_nl = l.z;
        if cos_nl <= 0.0 {
            continue;
        }
        let cos_nh = h.z.max(0.0);
        let cos_vh = v.dot(&h).max(brdf::COS_EPS);
        let g = brdf::geometry_smith(roughness, cos_nv, cos_nl);
        // f * cos_nl / pdf with pdf = D cos_nh / (4 cos_vh); D cancels
        let g_vis = g * cos_vh / (cos_nh.max(brdf::COS_EPS) * cos_nv);
        let fc = (1.0 - cos_vh).powi(5);
        f1 += (1.0 - fc) * g_vis;
        f2 += fc * g_vis;
    }
    (f1 / samples as f64, f2 / samples as f64)
}

/// Build the DFG table; deterministic for a given config.
pub fn compute_dfg_lut(cfg: &DfgConfig) -> Result<DfgLut> {
    if cfg.samples < 1024 {
        return Err(Error::Config("DFG LUT needs >= 1024 samples per entry".into()));
    }
    if cfg.n_cos < 2 || cfg.n_rough < 2 {
        return Err(Error::Config("DFG LUT needs at least a 2x2 grid".into()));
    }
    let entries: Vec<(f64, f64)> = (0..cfg.n_cos * cfg.n_rough)
        .into_par_iter()
        .map(|idx| {
            let i = idx % cfg.n_cos;
            let j = idx / cfg.n_cos;
            let cos_nv = (i as f64 + 0.5) / cfg.n_cos as f64;
            let rough = (j as f64 + 0.5) / cfg.n_rough as f64;
            let rng = Pcg32::from_key(cfg.seed, &[0xdf6, idx as u64]);
            integrate_dfg(cos_nv, rough, cfg.samples, rng)
        })
        .collect();
    Ok(DfgLut {
        n_cos: cfg.n_cos,
        n_rough: cfg.n_rough,
        f1: entries.iter().map(|e| e.0).collect(),
        f2: entries.iter().map(|e| e.1).collect(),
    })
}

impl DfgLut {
    /// Bilinear lookup with clamped edges.
    pub fn lookup(&self, cos_nv: f64, roughness: f64) -> (f64, f64) {
        let x = (cos_nv.clamp(0.0, 1.0) * self.n_cos as f64 - 0.5)
            .clamp(0.0, (self.n_cos - 1) as f64);
        let y = (roughness.clamp(0.0, 1.0) * self.n_rough as f64 - 0.5)
            .clamp(0.0, (self.n_rough - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.n_cos - 1);
        let y1 = (y0 + 1).min(self.n_rough - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let at = |v: &Vec<f64>, xx: usize, yy: usize| v[yy * self.n_cos + xx];
        let lerp2 = |v: &Vec<f64>| {
            at(v, x0, y0) * (1.0 - fx) * (1.0 - fy)
                + at(v, x1, y0) * fx * (1.0 - fy)
                + at(v, x0, y1) * (1.0 - fx) * fy
                + at(v, x1, y1) * fx * fy
        };
        (lerp2(&self.f1), lerp2(&self.f2))
    }

    /// Pack as a 3-channel image: F1 in R, F2 in G, zero B.
    pub fn to_image(&self) -> ImageBuffer {
        let mut data = Vec::with_capacity(self.n_cos * self.n_rough * 3);
        for i in 0..self.n_cos * self.n_rough {
            data.extend_from_slice(&[self.f1[i] as f32, self.f2[i] as f32, 0.0]);
        }
        ImageBuffer::new(self.n_cos, self.n_rough, 3, data).expect("valid by construction")
    }

    pub fn from_image(img: &ImageBuffer) -> Result<Self> {
        if img.channels != 3 {
            return Err(Error::Format("DFG LUT image must have 3 channels".into()));
        }
        let n = img.width * img.height;
        let mut f1 = Vec::with_capacity(n);
        let mut f2 = Vec::with_capacity(n);
        for i in 0..n {
            f1.push(img.data[i * 3] as f64);
            f2.push(img.data[i * 3 + 1] as f64);
        }
        Ok(DfgLut {
            n_cos: img.width,
            n_rough: img.height,
            f1,
            f2,
        })
    }
}

// ---------------------------------------------------------------------------
// Persistence

#[derive(serde::Serialize, serde::Deserialize)]
struct ChainSidecar {
    config: ChainConfig,
    source_hash: String,
    resolutions: Vec<[usize; 2]>,
    roughness: Vec<f64>,
    dfg: DfgConfig,
}

/// Write a prefiltered chain directory: one PFM per specular level,
/// the diffuse map, the DFG LUT, and a JSON sidecar.
pub fn save_chain<P: AsRef<Path>>(
    dir: P,
    pre: &PrefilteredEnvironment,
    lut: &DfgLut,
    dfg_cfg: &DfgConfig,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    for (level, mip) in pre.specular_mips.iter().enumerate() {
        imageio::write_pfm_file(dir.join(format!("spec_mip_{level}.pfm")), &mip.to_image())?;
    }
    imageio::write_pfm_file(dir.join("diffuse.pfm"), &pre.diffuse_map.to_image())?;
    imageio::write_pfm_file(dir.join("dfg_lut.pfm"), &lut.to_image())?;
    let sidecar = ChainSidecar {
        config: pre.meta.config.clone(),
        source_hash: pre.meta.source_hash.clone(),
        resolutions: pre
            .specular_mips
            .iter()
            .map(|m| [m.width, m.height])
            .collect(),
        roughness: (0..pre.levels())
            .map(|l| pre.meta.config.roughness_for_level(l))
            .collect(),
        dfg: dfg_cfg.clone(),
    };
    std::fs::write(
        dir.join("chain.json"),
        serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Internal(e.to_string()))?,
    )?;
    Ok(())
}

/// Load a chain directory written by [`save_chain`].
pub fn load_chain<P: AsRef<Path>>(dir: P) -> Result<(PrefilteredEnvironment, DfgLut)> {
    let dir = dir.as_ref();
    let sidecar: ChainSidecar = serde_json::from_str(
        &std::fs::read_to_string(dir.join("chain.json"))
            .map_err(|_| Error::Format(format!("{}: missing chain.json", dir.display())))?,
    )
    .map_err(|e| Error::Format(format!("chain.json: {e}")))?;
    let mut specular_mips = Vec::with_capacity(sidecar.config.levels);
    for level in 0..sidecar.config.levels {
        let img = imageio::read_pfm_file(dir.join(format!("spec_mip_{level}.pfm")))?;
        specular_mips.push(EnvironmentMap::from_image(&img)?);
    }
    let diffuse_map = EnvironmentMap::from_image(&imageio::read_pfm_file(dir.join("diffuse.pfm"))?)?;
    let lut = DfgLut::from_image(&imageio::read_pfm_file(dir.join("dfg_lut.pfm"))?)?;
    Ok((
        PrefilteredEnvironment {
            specular_mips,
            diffuse_map,
            meta: ChainMeta {
                config: sidecar.config,
                source_hash: sidecar.source_hash,
            },
        },
        lut,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_cfg() -> ChainConfig {
        ChainConfig {
            levels: 4,
            base_width: 64,
            spec_samples: 256,
            diffuse_width: 16,
            diffuse_samples: 2048,
            seed: 11,
        }
    }

    #[test]
    fn direction_texel_mapping_landmarks() {
        let (_, v) = direction_to_texel(Vec3::new(0.0, 1.0, 0.0), 64, 32);
        assert_relative_eq!(v, 0.0, epsilon = 1e-12);
        let (_, v) = direction_to_texel(Vec3::new(0.0, -1.0, 0.0), 64, 32);
        assert_relative_eq!(v, 32.0, epsilon = 1e-12);
        let (u, v) = direction_to_texel(Vec3::new(0.0, 0.0, -1.0), 64, 32);
        assert_relative_eq!(u, 32.0, epsilon = 1e-12); // width/2
        assert_relative_eq!(v, 16.0, epsilon = 1e-12);
    }

    #[test]
    fn direction_texel_roundtrip() {
        let mut rng = Pcg32::from_key(4, &[]);
        for _ in 0..200 {
            let d = Vec3::new(
                rng.next_f64() - 0.5,
                (rng.next_f64() - 0.5) * 1.6, // stay away from the poles
                rng.next_f64() - 0.5,
            )
            .normalize();
            let (u, v) = direction_to_texel(d, 128, 64);
            let back = texel_to_direction(u, v, 128, 64);
            assert!((back - d).norm() < 1e-6, "{d:?} -> {back:?}");
        }
    }

    #[test]
    fn constant_env_prefilters_to_constant() {
        let env = EnvironmentMap::constant(64, 32, Vec3::new(1.0, 2.0, 0.5));
        let mips = prefilter_specular(&env, &small_cfg()).unwrap();
        assert_eq!(mips.len(), 4);
        for mip in &mips {
            for p in &mip.pixels {
                assert!((p - Vec3::new(1.0, 2.0, 0.5)).norm() < 0.005 * 2.3);
            }
        }
    }

    #[test]
    fn mip_zero_is_resampled_source() {
        // smooth non-constant map
        let mut env = EnvironmentMap::constant(128, 64, Vec3::zeros());
        for y in 0..64 {
            for x in 0..128 {
                let v = 0.5 + 0.4 * (y as f64 / 63.0) + 0.1 * (2.0 * std::f64::consts::PI * x as f64 / 128.0).sin();
                env.set_texel(x, y, Vec3::repeat(v));
            }
        }
        let mips = prefilter_specular(&env, &small_cfg()).unwrap();
        let m0 = &mips[0];
        for y in 0..m0.height {
            for x in 0..m0.width {
                let d = m0.texel_direction(x, y);
                let expect = env.sample_direction(d);
                assert!((m0.texel(x, y) - expect).norm() < 1e-3);
            }
        }
    }

    #[test]
    fn filtered_lobe_widens_with_level() {
        // one bright texel on a dim background
        let mut env = EnvironmentMap::constant(64, 32, Vec3::repeat(0.01));
        env.set_texel(16, 16, Vec3::repeat(400.0));
        let cfg = small_cfg();
        let mips = prefilter_specular(&env, &cfg).unwrap();
        let mut widths = Vec::new();
        for mip in &mips[1..] {
            // angular half-max width on the equator row
            let row = mip.height / 2;
            let mx = (0..mip.width)
                .map(|x| mip.texel(x, row).x)
                .fold(0.0f64, f64::max);
            let above = (0..mip.width)
                .filter(|&x| mip.texel(x, row).x >= mx / 2.0)
                .count();
            widths.push(above as f64 * 2.0 * std::f64::consts::PI / mip.width as f64);
        }
        for w in widths.windows(2) {
            assert!(w[1] > w[0], "lobe widths not increasing: {widths:?}");
        }
    }

    #[test]
    fn irradiance_of_constant_env_is_constant() {
        let env = EnvironmentMap::constant(64, 32, Vec3::repeat(3.0));
        let irr = compute_irradiance(&env, 16, 2048, 7).unwrap();
        for p in &irr.pixels {
            assert!((p.x - 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn irradiance_of_upper_hemisphere_env() {
        // c in the upper hemisphere, 0 below
        let mut env = EnvironmentMap::constant(128, 64, Vec3::zeros());
        for y in 0..32 {
            for x in 0..128 {
                env.set_texel(x, y, Vec3::repeat(2.0));
            }
        }
        let irr = compute_irradiance(&env, 32, 8192, 3).unwrap();
        let up = irr.sample_direction(Vec3::new(0.0, 1.0, 0.0));
        let down = irr.sample_direction(Vec3::new(0.0, -1.0, 0.0));
        let side = irr.sample_direction(Vec3::new(1.0, 0.0, 0.0));
        assert!((up.x - 2.0).abs() < 0.04, "up {up:?}");
        assert!(down.x < 0.04, "down {down:?}");
        assert!((side.x - 1.0).abs() < 0.05, "side {side:?}");
    }

    #[test]
    fn prefilter_and_irradiance_are_linear_in_radiance() {
        let mut env = EnvironmentMap::constant(64, 32, Vec3::zeros());
        for y in 0..32 {
            for x in 0..64 {
                env.set_texel(x, y, Vec3::repeat(0.2 + ((x * 7 + y * 3) % 13) as f64 * 0.1));
            }
        }
        let scaled = EnvironmentMap {
            width: env.width,
            height: env.height,
            pixels: env.pixels.iter().map(|p| p * 3.0).collect(),
        };
        let cfg = small_cfg();
        let a = prefilter_specular(&env, &cfg).unwrap();
        let b = prefilter_specular(&scaled, &cfg).unwrap();
        for (ma, mb) in a.iter().zip(&b) {
            for (pa, pb) in ma.pixels.iter().zip(&mb.pixels) {
                assert!((pa * 3.0 - pb).norm() < 1e-12 * pb.norm().max(1.0));
            }
        }
        let ia = compute_irradiance(&env, 16, 512, cfg.seed).unwrap();
        let ib = compute_irradiance(&scaled, 16, 512, cfg.seed).unwrap();
        for (pa, pb) in ia.pixels.iter().zip(&ib.pixels) {
            assert!((pa * 3.0 - pb).norm() < 1e-12 * pb.norm().max(1.0));
        }
    }

    #[test]
    fn prefilter_is_rotation_equivariant() {
        // constant + spot, rotated by a quarter turn about +y
        let mut env = EnvironmentMap::constant(64, 32, Vec3::repeat(0.2));
        for dy in 0..3 {
            for dx in 0..3 {
                env.set_texel(20 + dx, 14 + dy, Vec3::repeat(30.0));
            }
        }
        let shift = 16usize;
        let mut rotated = EnvironmentMap::constant(64, 32, Vec3::zeros());
        for y in 0..32 {
            for x in 0..64 {
                rotated.set_texel((x + shift) % 64, y, env.texel(x, y));
            }
        }
        let mut cfg = small_cfg();
        cfg.spec_samples = 2048;
        let a = prefilter_specular(&env, &cfg).unwrap();
        let b = prefilter_specular(&rotated, &cfg).unwrap();
        // Texel RNG streams differ after the shift, so compare in aggregate:
        // total absolute deviation must stay within MC noise of the energy.
        for (level, (ma, mb)) in a.iter().zip(&b).enumerate().skip(1) {
            let level_shift = shift >> level;
            let mut l1 = 0.0f64;
            let mut total = 0.0f64;
            for y in 0..ma.height {
                for x in 0..ma.width {
                    let va = ma.texel(x, y).x;
                    let vb = mb.texel((x + level_shift) % ma.width, y).x;
                    l1 += (va - vb).abs();
                    total += va.abs();
                }
            }
            // a shift misalignment would push this past ~0.5
            let rel = l1 / total;
            assert!(rel < 0.15, "level {level}: aggregate deviation {rel}");
        }
    }

    #[test]
    fn sample_prefiltered_interpolates_levels() {
        // hand-constructed two-level chain with constant values 1 and 3
        let cfg = ChainConfig {
            levels: 2,
            base_width: 16,
            spec_samples: 64,
            diffuse_width: 8,
            diffuse_samples: 64,
            seed: 0,
        };
        let pre = PrefilteredEnvironment {
            specular_mips: vec![
                EnvironmentMap::constant(16, 8, Vec3::repeat(1.0)),
                EnvironmentMap::constant(8, 4, Vec3::repeat(3.0)),
            ],
            diffuse_map: EnvironmentMap::constant(8, 4, Vec3::repeat(1.0)),
            meta: ChainMeta {
                config: cfg,
                source_hash: String::new(),
            },
        };
        let dir = Vec3::new(0.3, 0.2, -0.9).normalize();
        assert_relative_eq!(sample_prefiltered(&pre, dir, 0.0).x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(sample_prefiltered(&pre, dir, 1.0).x, 3.0, epsilon = 1e-12);
        assert_relative_eq!(sample_prefiltered(&pre, dir, 0.5).x, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn sampling_is_continuous_across_the_seam() {
        let mut env = EnvironmentMap::constant(64, 32, Vec3::zeros());
        for y in 0..32 {
            for x in 0..64 {
                env.set_texel(x, y, Vec3::repeat(1.0 + (y as f64 / 31.0) + 0.3 * (x as f64 / 63.0 * std::f64::consts::PI).sin()));
            }
        }
        // directions just left and right of the u = 0 seam (phi = ±pi)
        let eps = 1e-9;
        let d_left = Vec3::new(-eps, 0.3, 1.0).normalize();
        let d_right = Vec3::new(eps, 0.3, 1.0).normalize();
        let a = env.sample_direction(d_left);
        let b = env.sample_direction(d_right);
        assert!((a - b).norm() < 1e-6);
    }

    #[test]
    fn dfg_lut_is_deterministic_and_bounded() {
        let cfg = DfgConfig {
            n_cos: 16,
            n_rough: 16,
            samples: 1024,
            seed: 9,
        };
        let a = compute_dfg_lut(&cfg).unwrap();
        let b = compute_dfg_lut(&cfg).unwrap();
        assert_eq!(a.f1, b.f1);
        assert_eq!(a.f2, b.f2);
        // The k = rho^4/2 geometry term under-shadows at grazing incidence,
        // so the split integral exceeds 1 for n·v below ~0.2; the energy
        // bound holds away from grazing.
        for j in 0..cfg.n_rough {
            for i in 0..cfg.n_cos {
                let idx = j * cfg.n_cos + i;
                let cos_nv = (i as f64 + 0.5) / cfg.n_cos as f64;
                assert!(a.f1[idx] >= 0.0 && a.f1[idx].is_finite(), "f1 {}", a.f1[idx]);
                assert!(a.f2[idx] >= 0.0 && a.f2[idx] <= 1.0, "f2 {}", a.f2[idx]);
                if cos_nv >= 0.25 {
                    assert!(
                        a.f1[idx] + a.f2[idx] <= 1.02,
                        "energy bound broken at cos {}: {}",
                        cos_nv,
                        a.f1[idx] + a.f2[idx]
                    );
                }
            }
        }
    }

    #[test]
    fn dfg_mirror_limit_at_normal_incidence() {
        let rng = Pcg32::from_key(1, &[]);
        let (f1, f2) = integrate_dfg(1.0, 0.01, 8192, rng);
        assert!((f1 - 1.0).abs() < 0.02, "f1 {f1}");
        assert!(f2.abs() < 0.02, "f2 {f2}");
    }

    #[test]
    fn dfg_f1_non_increasing_in_roughness_at_normal_incidence() {
        let cfg = DfgConfig {
            n_cos: 8,
            n_rough: 16,
            samples: 16384,
            seed: 2,
        };
        let lut = compute_dfg_lut(&cfg).unwrap();
        let mut prev = f64::INFINITY;
        for j in 0..cfg.n_rough {
            let rough = (j as f64 + 0.5) / cfg.n_rough as f64;
            let (f1, _) = lut.lookup(1.0, rough);
            assert!(f1 <= prev + 1e-3, "f1 rose at rho {rough}: {f1} > {prev}");
            prev = f1;
        }
    }

    #[test]
    fn chain_save_load_roundtrip() {
        let env = EnvironmentMap::constant(64, 32, Vec3::new(0.25, 0.5, 1.0));
        let cfg = small_cfg();
        let pre = PrefilteredEnvironment::build(&env, &cfg).unwrap();
        let dfg_cfg = DfgConfig {
            n_cos: 8,
            n_rough: 8,
            samples: 1024,
            seed: 0,
        };
        let lut = compute_dfg_lut(&dfg_cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_chain(dir.path(), &pre, &lut, &dfg_cfg).unwrap();
        let (pre2, lut2) = load_chain(dir.path()).unwrap();
        assert_eq!(pre2.levels(), pre.levels());
        assert_eq!(pre2.meta.source_hash, pre.meta.source_hash);
        // values survive the f32 narrowing of PFM
        for (a, b) in pre.specular_mips[1].pixels.iter().zip(&pre2.specular_mips[1].pixels) {
            assert!((a - b).norm() < 1e-6);
        }
        assert_eq!(lut2.n_cos, 8);
        for (a, b) in lut.f1.iter().zip(&lut2.f1) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn envmap_rejects_bad_aspect() {
        assert!(EnvironmentMap::new(3, 2, vec![Vec3::zeros(); 6]).is_err());
    }

    #[test]
    fn load_envmap_dispatches_on_extension() {
        let dir = tempfile::tempdir().unwrap();
        let img = EnvironmentMap::constant(4, 2, Vec3::repeat(1.5)).to_image();
        let path = dir.path().join("e.pfm");
        imageio::write_pfm_file(&path, &img).unwrap();
        let env = load_envmap(&path).unwrap();
        assert_eq!(env.width, 4);
        assert_eq!(env.texel(0, 0), Vec3::repeat(1.5));
        assert!(load_envmap(dir.path().join("missing.hdr")).is_err());
        let bad = dir.path().join("e.exr");
        std::fs::write(&bad, b"nope").unwrap();
        assert!(load_envmap(&bad).is_err());
    }
}
