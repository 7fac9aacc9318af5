//! Deferred split-sum shading of a [`GBuffer`] under prefiltered lighting.
//!
//! Per masked pixel the shaded color decomposes exactly as
//! `C = a_d ⊙ L_diff + a_s ⊙ L_spec`: the diffuse albedo times the
//! irradiance-map lookup at the normal, plus the specular albedo (base
//! reflectance scaled and biased by the DFG table) times the mip-chain
//! lookup at the reflection direction.

use std::path::Path;

use rayon::prelude::*;

use crate::brdf::{self, Material};
use crate::envlight::{sample_prefiltered, DfgLut, PrefilteredEnvironment};
use crate::error::{Error, Result};
use crate::imageio::{self, ImageBuffer};
use crate::raster::{vec3_image, GBuffer};
use crate::scene::Camera;
use crate::Vec3;

/// The full per-view output set: shaded color plus geometry and the
/// intermediate lighting maps. Background pixels are zero everywhere.
#[derive(Debug, Clone)]
pub struct RenderBuffers {
    pub width: usize,
    pub height: usize,
    pub color: Vec<Vec3>,
    pub normal: Vec<Vec3>,
    pub depth: Vec<f64>,
    pub mask: Vec<bool>,
    pub albedo: Vec<Vec3>,
    pub l_spec: Vec<Vec3>,
    pub l_diff: Vec<Vec3>,
}

/// Shading of a single surface point.
#[derive(Debug, Clone, Copy)]
pub struct ShadedPoint {
    pub color: Vec3,
    pub l_spec: Vec3,
    pub l_diff: Vec3,
}

/// Split-sum shading of one point. `n` must be unit; `v` points from the
/// surface to the camera. This is the forward model both the renderer and
/// the photometric-stereo solver evaluate.
pub fn shade_point(
    n: Vec3,
    v: Vec3,
    albedo: Vec3,
    material: &Material,
    pre: &PrefilteredEnvironment,
    lut: &DfgLut,
) -> ShadedPoint {
    let cos_nv = n.dot(&v).clamp(brdf::COS_EPS, 1.0);
    let r = brdf::reflect(v, n);
    let l_spec = sample_prefiltered(pre, r, material.roughness());
    let l_diff = pre.sample_diffuse(n);
    let (f1, f2) = lut.lookup(cos_nv, material.roughness());
    let a_s = brdf::specular_albedo(albedo, material, f1, f2);
    let a_d = brdf::diffuse_albedo(albedo, material);
    ShadedPoint {
        color: a_d.component_mul(&l_diff) + a_s.component_mul(&l_spec),
        l_spec,
        l_diff,
    }
}

/// Shade every masked pixel of the GBuffer with one uniform material.
pub fn shade_splitsum(
    gbuffer: &GBuffer,
    material: &Material,
    pre: &PrefilteredEnvironment,
    lut: &DfgLut,
    camera: &Camera,
) -> Result<RenderBuffers> {
    if gbuffer.width != camera.width || gbuffer.height != camera.height {
        return Err(Error::Dimension(format!(
            "gbuffer {}x{} vs camera {}x{}",
            gbuffer.width, gbuffer.height, camera.width, camera.height
        )));
    }
    let cam_pos = camera.position_v();
    let n_pix = gbuffer.width * gbuffer.height;
    let shaded: Vec<ShadedPoint> = (0..n_pix)
        .into_par_iter()
        .map(|i| {
            if !gbuffer.mask[i] {
                return ShadedPoint {
                    color: Vec3::zeros(),
                    l_spec: Vec3::zeros(),
                    l_diff: Vec3::zeros(),
                };
            }
            let v = (cam_pos - gbuffer.position[i]).normalize();
            shade_point(gbuffer.normal[i], v, gbuffer.albedo[i], material, pre, lut)
        })
        .collect();
    Ok(RenderBuffers {
        width: gbuffer.width,
        height: gbuffer.height,
        color: shaded.iter().map(|s| s.color).collect(),
        normal: gbuffer.normal.clone(),
        depth: gbuffer.depth.clone(),
        mask: gbuffer.mask.clone(),
        albedo: gbuffer.albedo.clone(),
        l_spec: shaded.iter().map(|s| s.l_spec).collect(),
        l_diff: shaded.iter().map(|s| s.l_diff).collect(),
    })
}

/// Relighting and material editing are exactly re-invocation of
/// [`shade_splitsum`] with a different environment or material.
pub fn relight(
    gbuffer: &GBuffer,
    material: &Material,
    new_env: &PrefilteredEnvironment,
    lut: &DfgLut,
    camera: &Camera,
) -> Result<RenderBuffers> {
    shade_splitsum(gbuffer, material, new_env, lut, camera)
}

impl RenderBuffers {
    /// Largest violation of `C = a_d ⊙ L_diff + a_s ⊙ L_spec` over masked
    /// pixels, with the albedo combinations recomputed from stored buffers.
    pub fn max_decomposition_error(
        &self,
        material: &Material,
        lut: &DfgLut,
        camera: &Camera,
    ) -> f64 {
        let cam_pos = camera.position_v();
        let b = camera.basis();
        let mut worst = 0.0f64;
        for y in 0..self.height {
            for x in 0..self.width {
                let i = y * self.width + x;
                if !self.mask[i] {
                    continue;
                }
                // surface point from the pixel ray and camera-space depth
                let (o, d) = camera.ray_through(x as f64 + 0.5, y as f64 + 0.5);
                let t = self.depth[i] / d.dot(&b.forward);
                let pos = o + d * t;
                let v = (cam_pos - pos).normalize();
                let cos_nv = self.normal[i].dot(&v).clamp(brdf::COS_EPS, 1.0);
                let (f1, f2) = lut.lookup(cos_nv, material.roughness());
                let a_s = brdf::specular_albedo(self.albedo[i], material, f1, f2);
                let a_d = brdf::diffuse_albedo(self.albedo[i], material);
                let expect = a_d.component_mul(&self.l_diff[i]) + a_s.component_mul(&self.l_spec[i]);
                worst = worst.max((expect - self.color[i]).abs().max());
            }
        }
        worst
    }

    pub fn color_image(&self) -> ImageBuffer {
        vec3_image(self.width, self.height, &self.color)
    }

    pub fn normal_image(&self) -> ImageBuffer {
        vec3_image(self.width, self.height, &self.normal)
    }

    pub fn albedo_image(&self) -> ImageBuffer {
        vec3_image(self.width, self.height, &self.albedo)
    }

    pub fn l_spec_image(&self) -> ImageBuffer {
        vec3_image(self.width, self.height, &self.l_spec)
    }

    pub fn l_diff_image(&self) -> ImageBuffer {
        vec3_image(self.width, self.height, &self.l_diff)
    }

    pub fn depth_image(&self) -> ImageBuffer {
        let data: Vec<f32> = self.depth.iter().map(|&d| d as f32).collect();
        ImageBuffer::new(self.width, self.height, 1, data).expect("valid dims")
    }

    pub fn mask_image(&self) -> ImageBuffer {
        let data: Vec<f32> = self.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        ImageBuffer::new(self.width, self.height, 1, data).expect("valid dims")
    }
}

/// File names for one persisted view, `{view_id}_{buffer}.{ext}`.
pub fn buffer_file_names(view_id: &str) -> [(String, &'static str); 8] {
    [
        (format!("{view_id}_color.pfm"), "color"),
        (format!("{view_id}_normal.pfm"), "normal"),
        (format!("{view_id}_depth.pfm"), "depth"),
        (format!("{view_id}_mask.png"), "mask"),
        (format!("{view_id}_albedo.pfm"), "albedo"),
        (format!("{view_id}_l_spec.pfm"), "l_spec"),
        (format!("{view_id}_l_diff.pfm"), "l_diff"),
        (format!("{view_id}_preview.png"), "preview"),
    ]
}

/// Persist the seven buffers plus a tonemapped preview.
pub fn save_render_buffers<P: AsRef<Path>>(dir: P, view_id: &str, rb: &RenderBuffers) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    imageio::write_pfm_file(dir.join(format!("{view_id}_color.pfm")), &rb.color_image())?;
    imageio::write_pfm_file(dir.join(format!("{view_id}_normal.pfm")), &rb.normal_image())?;
    imageio::write_pfm_file(dir.join(format!("{view_id}_depth.pfm")), &rb.depth_image())?;
    std::fs::write(
        dir.join(format!("{view_id}_mask.png")),
        imageio::write_png_gray(&rb.mask_image())?,
    )?;
    imageio::write_pfm_file(dir.join(format!("{view_id}_albedo.pfm")), &rb.albedo_image())?;
    imageio::write_pfm_file(dir.join(format!("{view_id}_l_spec.pfm")), &rb.l_spec_image())?;
    imageio::write_pfm_file(dir.join(format!("{view_id}_l_diff.pfm")), &rb.l_diff_image())?;
    std::fs::write(
        dir.join(format!("{view_id}_preview.png")),
        imageio::write_png_preview(&rb.color_image())?,
    )?;
    Ok(())
}

fn image_to_vec3(img: &ImageBuffer) -> Vec<Vec3> {
    (0..img.width * img.height)
        .map(|i| {
            let p = &img.data[i * img.channels..i * img.channels + img.channels];
            if img.channels == 1 {
                Vec3::repeat(p[0] as f64)
            } else {
                Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)
            }
        })
        .collect()
}

/// Load buffers persisted by [`save_render_buffers`]. Values round-trip
/// through the f32 precision of PFM; the mask through 8-bit PNG.
pub fn load_render_buffers<P: AsRef<Path>>(dir: P, view_id: &str) -> Result<RenderBuffers> {
    let dir = dir.as_ref();
    let color_img = imageio::read_pfm_file(dir.join(format!("{view_id}_color.pfm")))?;
    let (width, height) = (color_img.width, color_img.height);
    let normal_img = imageio::read_pfm_file(dir.join(format!("{view_id}_normal.pfm")))?;
    let depth_img = imageio::read_pfm_file(dir.join(format!("{view_id}_depth.pfm")))?;
    let albedo_img = imageio::read_pfm_file(dir.join(format!("{view_id}_albedo.pfm")))?;
    let l_spec_img = imageio::read_pfm_file(dir.join(format!("{view_id}_l_spec.pfm")))?;
    let l_diff_img = imageio::read_pfm_file(dir.join(format!("{view_id}_l_diff.pfm")))?;
    let mask_img = imageio::read_png(&std::fs::read(dir.join(format!("{view_id}_mask.png")))?)?;
    for img in [&normal_img, &depth_img, &albedo_img, &l_spec_img, &l_diff_img, &mask_img] {
        if img.width != width || img.height != height {
            return Err(Error::Dimension(format!(
                "buffer resolution mismatch in view {view_id}"
            )));
        }
    }
    Ok(RenderBuffers {
        width,
        height,
        color: image_to_vec3(&color_img),
        normal: image_to_vec3(&normal_img),
        depth: depth_img.data.iter().map(|&d| d as f64).collect(),
        mask: (0..width * height)
            .map(|i| mask_img.data[i * mask_img.channels] > 0.5)
            .collect(),
        albedo: image_to_vec3(&albedo_img),
        l_spec: image_to_vec3(&l_spec_img),
        l_diff: image_to_vec3(&l_diff_img),
    })
}
