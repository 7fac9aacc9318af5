//! Software triangle rasterization into per-pixel geometry buffers.
//!
//! Coverage uses pixel-center sampling with 24.8 fixed-point edge functions
//! and the top-left fill rule, so triangles sharing an edge cover every
//! pixel along it exactly once. Interpolation is perspective-correct.
//! Backfaces are rendered; normals are flipped toward the camera when
//! n·v < 0 and the flip is recorded in the buffer. Ties in depth keep the
//! lower face index.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageio::ImageBuffer;
use crate::scene::{sample_texture_clamp, AlbedoSource, Camera, TriangleMesh};
use crate::Vec3;

const SUBPIX: f64 = 256.0;
const BAND_ROWS: usize = 32;

/// Per-pixel geometry buffers: world position, unit normal, camera-space
/// depth, coverage mask, interpolated albedo. Background pixels hold zeros.
#[derive(Debug, Clone)]
pub struct GBuffer {
    pub width: usize,
    pub height: usize,
    pub position: Vec<Vec3>,
    pub normal: Vec<Vec3>,
    pub depth: Vec<f64>,
    pub mask: Vec<bool>,
    pub albedo: Vec<Vec3>,
}

impl GBuffer {
    fn zeros(width: usize, height: usize) -> Self {
        GBuffer {
            width,
            height,
            position: vec![Vec3::zeros(); width * height],
            normal: vec![Vec3::zeros(); width * height],
            depth: vec![0.0; width * height],
            mask: vec![false; width * height],
            albedo: vec![Vec3::zeros(); width * height],
        }
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn covered_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn position_image(&self) -> ImageBuffer {
        vec3_image(self.width, self.height, &self.position)
    }

    pub fn normal_image(&self) -> ImageBuffer {
        vec3_image(self.width, self.height, &self.normal)
    }

    pub fn albedo_image(&self) -> ImageBuffer {
        vec3_image(self.width, self.height, &self.albedo)
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

pub(crate) fn vec3_image(width: usize, height: usize, data: &[Vec3]) -> ImageBuffer {
    let mut out = Vec::with_capacity(data.len() * 3);
    for v in data {
        out.extend_from_slice(&[v.x as f32, v.y as f32, v.z as f32]);
    }
    ImageBuffer::new(width, height, 3, out).expect("valid dims")
}

/// Camera-space depth image with background 0 (the stored depth already is
/// camera-space distance along the view axis, not NDC).
pub fn depth_linearization(gbuffer: &GBuffer) -> ImageBuffer {
    gbuffer.depth_image()
}

#[derive(Clone, Copy)]
struct ClipVertex {
    view: Vec3, // camera-space position (x right, y up, z forward)
    normal: Vec3,
    albedo: Vec3,
    uv: [f64; 2],
}

fn lerp_vertex(a: &ClipVertex, b: &ClipVertex, t: f64) -> ClipVertex {
    ClipVertex {
        view: a.view + (b.view - a.view) * t,
        normal: a.normal + (b.normal - a.normal) * t,
        albedo: a.albedo + (b.albedo - a.albedo) * t,
        uv: [
            a.uv[0] + (b.uv[0] - a.uv[0]) * t,
            a.uv[1] + (b.uv[1] - a.uv[1]) * t,
        ],
    }
}

/// Clip a triangle against the view-space plane z = near. Returns 0, 3 or
/// 4 vertices (attributes interpolated linearly in view space).
fn clip_near(tri: &[ClipVertex; 3], near: f64) -> Vec<ClipVertex> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = &tri[i];
        let b = &tri[(i + 1) % 3];
        let a_in = a.view.z >= near;
        let b_in = b.view.z >= near;
        if a_in {
            out.push(*a);
        }
        if a_in != b_in {
            let t = (near - a.view.z) / (b.view.z - a.view.z);
            out.push(lerp_vertex(a, b, t));
        }
    }
    out
}

struct ScreenVertex {
    xf: i64, // 24.8 fixed-point screen x
    yf: i64,
    inv_z: f64,
    normal: Vec3,
    albedo: Vec3,
    uv: [f64; 2],
}

// Triangles are drawn in submission (face) order with a strict depth test,
// so equal-depth ties resolve to the lower face index.
struct ScreenTriangle {
    v: [ScreenVertex; 3],
}

/// Rasterize a mesh into a fresh [`GBuffer`]. Per-pixel outputs are
/// perspective-correct; the z-buffer keeps the nearest fragment.
pub fn rasterize(mesh: &TriangleMesh, camera: &Camera) -> Result<GBuffer> {
    camera.validate()?;
    mesh.validate()?;
    let (w, h) = (camera.width, camera.height);
    let basis = camera.basis();
    let cam_pos = camera.position_v();
    let tan_half = camera.tan_half_fov();
    let aspect = camera.aspect();

    // project | clip | triangulate, in face order
    let textured = matches!(mesh.albedo, AlbedoSource::Texture { .. });
    let uv_of = |i: usize| -> [f64; 2] {
        match &mesh.albedo {
            AlbedoSource::Texture { uvs, .. } => uvs[i],
            _ => [0.0, 0.0],
        }
    };
    let to_screen = |cv: &ClipVertex| -> ScreenVertex {
        let z = cv.view.z;
        let ndc_x = cv.view.x / (z * tan_half * aspect);
        let ndc_y = cv.view.y / (z * tan_half);
        let sx = (ndc_x * 0.5 + 0.5) * w as f64;
        let sy = (0.5 - ndc_y * 0.5) * h as f64;
        ScreenVertex {
            xf: (sx * SUBPIX).round() as i64,
            yf: (sy * SUBPIX).round() as i64,
            inv_z: 1.0 / z,
            normal: cv.normal,
            albedo: cv.albedo,
            uv: cv.uv,
        }
    };

    let mut triangles: Vec<ScreenTriangle> = Vec::new();
    for f in mesh.faces.iter() {
        let cv: [ClipVertex; 3] = std::array::from_fn(|k| {
            let i = f[k];
            let rel = mesh.vertices[i] - cam_pos;
            ClipVertex {
                view: Vec3::new(rel.dot(&basis.right), rel.dot(&basis.up), rel.dot(&basis.forward)),
                normal: mesh.normals[i],
                albedo: mesh.vertex_albedo(i),
                uv: uv_of(i),
            }
        });
        let poly = if cv.iter().all(|v| v.view.z >= camera.near) {
            cv.to_vec()
        } else {
            clip_near(&cv, camera.near)
        };
        if poly.len() < 3 {
            continue;
        }
        for k in 1..poly.len() - 1 {
            let mut tri = ScreenTriangle {
                v: [to_screen(&poly[0]), to_screen(&poly[k]), to_screen(&poly[k + 1])],
            };
            let area2 = edge_cross(&tri.v[0], &tri.v[1], &tri.v[2]);
            if area2 == 0 {
                continue;
            }
            if area2 < 0 {
                tri.v.swap(1, 2);
            }
            triangles.push(tri);
        }
    }

    // bin into horizontal bands, preserving face order
    let n_bands = h.div_ceil(BAND_ROWS);
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); n_bands];
    for (idx, tri) in triangles.iter().enumerate() {
        let ymin = tri.v.iter().map(|v| v.yf).min().unwrap();
        let ymax = tri.v.iter().map(|v| v.yf).max().unwrap();
        let y_lo = ((ymin - 128).div_euclid(256)).clamp(0, h as i64 - 1) as usize;
        let y_hi = ((ymax + 127).div_euclid(256)).clamp(0, h as i64 - 1) as usize;
        for band in y_lo / BAND_ROWS..=y_hi / BAND_ROWS {
            bins[band].push(idx);
        }
    }

    let bands: Vec<GBuffer> = (0..n_bands)
        .into_par_iter()
        .map(|band| {
            let y0 = band * BAND_ROWS;
            let rows = BAND_ROWS.min(h - y0);
            let mut out = GBuffer::zeros(w, rows);
            let mut zbuf = vec![f64::INFINITY; w * rows];
            for &idx in &bins[band] {
                draw_triangle(
                    &triangles[idx],
                    y0,
                    &mut out,
                    &mut zbuf,
                    camera,
                    cam_pos,
                    mesh,
                    textured,
                );
            }
            out
        })
        .collect();

    let mut g = GBuffer::zeros(w, 0);
    g.height = h;
    for band in bands {
        g.position.extend(band.position);
        g.normal.extend(band.normal);
        g.depth.extend(band.depth);
        g.mask.extend(band.mask);
        g.albedo.extend(band.albedo);
    }
    Ok(g)
}

fn edge_cross(a: &ScreenVertex, b: &ScreenVertex, c: &ScreenVertex) -> i64 {
    (b.xf - a.xf) * (c.yf - a.yf) - (b.yf - a.yf) * (c.xf - a.xf)
}

/// Top-left classification of a directed edge in y-down screen space.
fn is_top_left(dx: i64, dy: i64) -> bool {
    dy < 0 || (dy == 0 && dx > 0)
}

#[allow(clippy::too_many_arguments)]
fn draw_triangle(
    tri: &ScreenTriangle,
    band_y0: usize,
    out: &mut GBuffer,
    zbuf: &mut [f64],
    camera: &Camera,
    cam_pos: Vec3,
    mesh: &TriangleMesh,
    textured: bool,
) {
    let [v0, v1, v2] = &tri.v;
    let area2 = edge_cross(v0, v1, v2) as f64;
    debug_assert!(area2 > 0.0);
    let forward = camera.basis().forward;

    // pixel-center coverage bounds within this band
    let (w, rows) = (out.width as i64, out.height as i64);
    let xmin = tri.v.iter().map(|v| v.xf).min().unwrap();
    let xmax = tri.v.iter().map(|v| v.xf).max().unwrap();
    let ymin = tri.v.iter().map(|v| v.yf).min().unwrap();
    let ymax = tri.v.iter().map(|v| v.yf).max().unwrap();
    let x_lo = (xmin + 127).div_euclid(256).clamp(0, w - 1);
    let x_hi = (xmax - 128).div_euclid(256).clamp(0, w - 1);
    let y_lo = (ymin + 127).div_euclid(256).clamp(band_y0 as i64, band_y0 as i64 + rows - 1);
    let y_hi = (ymax - 128).div_euclid(256).clamp(band_y0 as i64, band_y0 as i64 + rows - 1);
    if x_lo > x_hi || y_lo > y_hi {
        return;
    }

    // edge functions with top-left bias; E >= 0 (after bias) covers
    let edges = [(v1, v2), (v2, v0), (v0, v1)]; // opposite v0, v1, v2
    let bias: [i64; 3] = std::array::from_fn(|i| {
        let (a, b) = edges[i];
        if is_top_left(b.xf - a.xf, b.yf - a.yf) {
            0
        } else {
            -1
        }
    });

    for y in y_lo..=y_hi {
        let py = y * 256 + 128;
        for x in x_lo..=x_hi {
            let px = x * 256 + 128;
            let mut e = [0i64; 3];
            let mut inside = true;
            for i in 0..3 {
                let (a, b) = edges[i];
                e[i] = (b.xf - a.xf) * (py - a.yf) - (b.yf - a.yf) * (px - a.xf);
                if e[i] + bias[i] < 0 {
                    inside = false;
                    break;
                }
            }
            if !inside {
                continue;
            }
            let l0 = e[0] as f64 / area2;
            let l1 = e[1] as f64 / area2;
            let l2 = e[2] as f64 / area2;
            let denom = l0 * v0.inv_z + l1 * v1.inv_z + l2 * v2.inv_z;
            if denom <= 0.0 {
                continue;
            }
            let depth = 1.0 / denom;
            if depth > camera.far {
                continue;
            }
            let pix = (y as usize - band_y0) * out.width + x as usize;
            if depth >= zbuf[pix] {
                continue;
            }
            zbuf[pix] = depth;

            let persp = |a0: Vec3, a1: Vec3, a2: Vec3| -> Vec3 {
                (a0 * (l0 * v0.inv_z) + a1 * (l1 * v1.inv_z) + a2 * (l2 * v2.inv_z)) / denom
            };
            // position on the pixel-center ray at the interpolated depth, so
            // depth/position/view-vector stay mutually consistent downstream
            let (ray_o, ray_d) = camera.ray_through(x as f64 + 0.5, y as f64 + 0.5);
            let world = ray_o + ray_d * (depth / ray_d.dot(&forward));
            let mut normal = persp(v0.normal, v1.normal, v2.normal);
            let len = normal.norm();
            normal = if len > 1e-12 {
                normal / len
            } else {
                -(world - cam_pos).normalize()
            };
            // flip toward the camera for shading stability
            let view = (cam_pos - world).normalize();
            if normal.dot(&view) < 0.0 {
                normal = -normal;
            }
            let albedo = if textured {
                let uv_u = (l0 * v0.uv[0] * v0.inv_z + l1 * v1.uv[0] * v1.inv_z + l2 * v2.uv[0] * v2.inv_z) / denom;
                let uv_v = (l0 * v0.uv[1] * v0.inv_z + l1 * v1.uv[1] * v1.inv_z + l2 * v2.uv[1] * v2.inv_z) / denom;
                match &mesh.albedo {
                    AlbedoSource::Texture { image, .. } => sample_texture_clamp(image, [uv_u, uv_v]),
                    _ => unreachable!("textured flag implies texture source"),
                }
            } else {
                persp(v0.albedo, v1.albedo, v2.albedo)
            };

            out.position[pix] = world;
            out.normal[pix] = normal;
            out.depth[pix] = depth;
            out.mask[pix] = true;
            out.albedo[pix] = albedo.sup(&Vec3::zeros()).inf(&Vec3::repeat(1.0));
        }
    }
}

/// Validate the GBuffer's structural invariants (used by tests).
pub fn check_gbuffer(g: &GBuffer, camera: &Camera) -> Result<()> {
    for i in 0..g.width * g.height {
        if g.mask[i] {
            if (g.normal[i].norm() - 1.0).abs() > 1e-4 {
                return Err(Error::Internal(format!("non-unit normal at {i}")));
            }
            if !(camera.near <= g.depth[i] && g.depth[i] <= camera.far) {
                return Err(Error::Internal(format!("depth {} out of range", g.depth[i])));
            }
        } else if g.position[i] != Vec3::zeros()
            || g.normal[i] != Vec3::zeros()
            || g.depth[i] != 0.0
            || g.albedo[i] != Vec3::zeros()
        {
            return Err(Error::Internal(format!("background pixel {i} not zeroed")));
        }
    }
    Ok(())
}
