//! Cook-Torrance microfacet terms and the split-sum albedo combinations.
//!
//! Conventions: all direction vectors point away from the surface; every
//! cosine fed to a division is clamped to [`COS_EPS`, 1] first. The
//! geometry term uses the Schlick-GGX form with k = roughness^4 / 2.

use crate::Vec3;

/// Lower clamp for cosines appearing in denominators.
pub const COS_EPS: f64 = 1e-4;

/// Base reflectance of dielectrics in the metallic workflow.
pub const DIELECTRIC_F0: f64 = 0.04;

/// Metallic/roughness material. Derived quantities (`alpha`, `k`) are
/// recomputed on demand so they can never go stale.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Material {
    metallic: f64,
    roughness: f64,
}

impl Material {
    /// Both parameters are clamped into [0, 1].
    pub fn new(metallic: f64, roughness: f64) -> Self {
        Material {
            metallic: metallic.clamp(0.0, 1.0),
            roughness: roughness.clamp(0.0, 1.0),
        }
    }

    pub fn metallic(&self) -> f64 {
        self.metallic
    }

    pub fn roughness(&self) -> f64 {
        self.roughness
    }

    /// GGX width parameter, roughness squared.
    pub fn alpha(&self) -> f64 {
        self.roughness * self.roughness
    }

    /// Schlick-GGX geometry constant, roughness^4 / 2.
    pub fn geometry_k(&self) -> f64 {
        let a = self.alpha();
        a * a * 0.5
    }

    /// Base reflectance: (1-m) * 0.04 + m * albedo, per channel.
    pub fn f0(&self, albedo: Vec3) -> Vec3 {
        Vec3::repeat(DIELECTRIC_F0) * (1.0 - self.metallic) + albedo * self.metallic
    }
}

/// Orthonormal shading directions at one surface point.
#[derive(Debug, Clone, Copy)]
pub struct ShadingFrame {
    pub n: Vec3,
    pub v: Vec3,
    pub l: Vec3,
    pub h: Vec3,
}

impl ShadingFrame {
    /// Build the frame; the half vector is normalize(v + l).
    pub fn new(n: Vec3, v: Vec3, l: Vec3) -> Self {
        let h = (v + l).normalize();
        ShadingFrame { n, v, l, h }
    }
}

/// Schlick's Fresnel approximation, componentwise over RGB.
pub fn fresnel_schlick(f0: Vec3, cos_vh: f64) -> Vec3 {
    let w = (1.0 - cos_vh).clamp(0.0, 1.0).powi(5);
    f0 + (Vec3::repeat(1.0) - f0) * w
}

/// Trowbridge-Reitz GGX normal distribution, alpha = roughness^2.
pub fn ggx_ndf(roughness: f64, cos_nh: f64) -> f64 {
    let a = roughness * roughness;
    let a2 = a * a;
    let c2 = cos_nh * cos_nh;
    let denom = (c2 * (a2 - 1.0) + 1.0).powi(2) * std::f64::consts::PI;
    a2 / denom.max(1e-12)
}

fn geometry_schlick_sub(cos: f64, k: f64) -> f64 {
    cos / (cos * (1.0 - k) + k).max(1e-12)
}

/// Smith-style product of Schlick-GGX sub-terms, k = roughness^4 / 2.
pub fn geometry_smith(roughness: f64, cos_nv: f64, cos_nl: f64) -> f64 {
    let k = Material::new(0.0, roughness).geometry_k();
    geometry_schlick_sub(cos_nv, k) * geometry_schlick_sub(cos_nl, k)
}

/// Specular albedo of the split-sum: ((1-m) * 0.04 + m * a) * F1 + F2.
pub fn specular_albedo(albedo: Vec3, material: &Material, f1: f64, f2: f64) -> Vec3 {
    let s = material.f0(albedo) * f1 + Vec3::repeat(f2);
    s.sup(&Vec3::zeros())
}

/// Diffuse albedo (1 - m) * a.
pub fn diffuse_albedo(albedo: Vec3, material: &Material) -> Vec3 {
    albedo * (1.0 - material.metallic())
}

/// Mirror `v` about `n`: r = 2 (n·v) n - v. Both inputs unit length,
/// pointing away from the surface.
pub fn reflect(v: Vec3, n: Vec3) -> Vec3 {
    n * (2.0 * n.dot(&v)) - v
}
