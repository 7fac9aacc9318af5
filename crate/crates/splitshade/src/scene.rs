//! Triangle meshes, cameras, and scene normalization.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imageio::ImageBuffer;
use crate::Vec3;

pub mod shapes;

/// Where per-surface albedo comes from.
#[derive(Debug, Clone)]
pub enum AlbedoSource {
    /// One linear RGB value for the whole mesh.
    Uniform(Vec3),
    /// One linear RGB value per vertex, interpolated over faces.
    PerVertex(Vec<Vec3>),
    /// A linear texture bilinearly sampled at per-vertex UVs (clamp wrap).
    Texture { image: ImageBuffer, uvs: Vec<[f64; 2]> },
}

/// Indexed triangle mesh with unit vertex normals.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub albedo: AlbedoSource,
}

impl TriangleMesh {
    /// Check the structural invariants: index bounds, unit normals,
    /// finite coordinates, albedo values in [0,1].
    pub fn validate(&self) -> Result<()> {
        if self.faces.is_empty() {
            return Err(Error::Degenerate("mesh has no faces".into()));
        }
        if self.normals.len() != self.vertices.len() {
            return Err(Error::Dimension(format!(
                "{} normals for {} vertices",
                self.normals.len(),
                self.vertices.len()
            )));
        }
        for f in &self.faces {
            if f.iter().any(|&i| i >= self.vertices.len()) {
                return Err(Error::Format(format!("face index out of bounds: {f:?}")));
            }
        }
        for v in &self.vertices {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(Error::Format("non-finite vertex coordinate".into()));
            }
        }
        for n in &self.normals {
            if (n.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::Format(format!("normal not unit length: {n:?}")));
            }
        }
        match &self.albedo {
            AlbedoSource::Uniform(a) => check_albedo(a)?,
            AlbedoSource::PerVertex(colors) => {
                if colors.len() != self.vertices.len() {
                    return Err(Error::Dimension("per-vertex albedo count mismatch".into()));
                }
                for a in colors {
                    check_albedo(a)?;
                }
            }
            AlbedoSource::Texture { uvs, .. } => {
                if uvs.len() != self.vertices.len() {
                    return Err(Error::Dimension("per-vertex UV count mismatch".into()));
                }
            }
        }
        Ok(())
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Albedo of vertex `i`, resolving the texture case by UV lookup.
    pub fn vertex_albedo(&self, i: usize) -> Vec3 {
        match &self.albedo {
            AlbedoSource::Uniform(a) => *a,
            AlbedoSource::PerVertex(colors) => colors[i],
            AlbedoSource::Texture { image, uvs } => sample_texture_clamp(image, uvs[i]),
        }
    }

    /// Replace the albedo source with a texture (UVs must already exist
    /// on the mesh for this to be meaningful; absent UVs default to 0,0).
    pub fn with_texture(mut self, image: ImageBuffer) -> Self {
        let uvs = match &self.albedo {
            AlbedoSource::Texture { uvs, .. } => uvs.clone(),
            _ => vec![[0.0, 0.0]; self.vertices.len()],
        };
        self.albedo = AlbedoSource::Texture { image, uvs };
        self
    }
}

fn check_albedo(a: &Vec3) -> Result<()> {
    if a.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
        return Err(Error::Format(format!("albedo out of [0,1]: {a:?}")));
    }
    Ok(())
}

/// Bilinear texture sample with clamp wrap; UV origin bottom-left.
pub fn sample_texture_clamp(img: &ImageBuffer, uv: [f64; 2]) -> Vec3 {
    let (w, h) = (img.width as f64, img.height as f64);
    let x = (uv[0].clamp(0.0, 1.0) * w - 0.5).clamp(0.0, w - 1.0);
    let y = ((1.0 - uv[1].clamp(0.0, 1.0)) * h - 0.5).clamp(0.0, h - 1.0);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(img.width - 1), (y0 + 1).min(img.height - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let px = |xx: usize, yy: usize| -> Vec3 {
        let p = img.pixel(xx, yy);
        if img.channels == 1 {
            Vec3::repeat(p[0] as f64)
        } else {
            Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)
        }
    };
    px(x0, y0) * (1.0 - fx) * (1.0 - fy)
        + px(x1, y0) * fx * (1.0 - fy)
        + px(x0, y1) * (1.0 - fx) * fy
        + px(x1, y1) * fx * fy
}

// ---------------------------------------------------------------------------
// OBJ loading

#[derive(Hash, PartialEq, Eq, Clone, Copy)]
struct ObjKey {
    v: usize,
    vt: Option<usize>,
    vn: Option<usize>,
}

/// Load a Wavefront OBJ file. Quads and larger polygons are fan-triangulated;
/// vertices without explicit normals receive area-weighted smooth normals.
/// The `v x y z r g b` vertex-color extension selects per-vertex albedo.
pub fn load_mesh<P: AsRef<Path>>(path: P) -> Result<TriangleMesh> {
    let text = fs::read_to_string(&path)?;
    parse_obj(&text, &path.as_ref().display().to_string())
}

pub fn parse_obj(text: &str, path: &str) -> Result<TriangleMesh> {
    let mut positions: Vec<Vec3> = Vec::new();
    let mut colors: Vec<Option<Vec3>> = Vec::new();
    let mut texcoords: Vec<[f64; 2]> = Vec::new();
    let mut obj_normals: Vec<Vec3> = Vec::new();
    let mut face_keys: Vec<[ObjKey; 3]> = Vec::new();

    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_string(),
        line,
        msg,
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut it = l.split_whitespace();
        let tag = it.next().unwrap();
        let rest: Vec<&str> = it.collect();
        match tag {
            "v" => {
                let nums: Vec<f64> = rest
                    .iter()
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(line, format!("bad vertex: {e}")))?;
                if nums.len() != 3 && nums.len() != 6 {
                    return Err(err(line, format!("vertex needs 3 or 6 numbers, got {}", nums.len())));
                }
                positions.push(Vec3::new(nums[0], nums[1], nums[2]));
                colors.push(if nums.len() == 6 {
                    Some(Vec3::new(nums[3], nums[4], nums[5]))
                } else {
                    None
                });
            }
            "vt" => {
                let nums: Vec<f64> = rest
                    .iter()
                    .take(2)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(line, format!("bad texcoord: {e}")))?;
                if nums.len() < 2 {
                    return Err(err(line, "texcoord needs 2 numbers".into()));
                }
                texcoords.push([nums[0], nums[1]]);
            }
            "vn" => {
                let nums: Vec<f64> = rest
                    .iter()
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(line, format!("bad normal: {e}")))?;
                if nums.len() != 3 {
                    return Err(err(line, "normal needs 3 numbers".into()));
                }
                let n = Vec3::new(nums[0], nums[1], nums[2]);
                let norm = n.norm();
                if norm < 1e-12 {
                    return Err(err(line, "zero-length normal".into()));
                }
                obj_normals.push(n / norm);
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(err(line, "face needs at least 3 vertices".into()));
                }
                let mut keys = Vec::with_capacity(rest.len());
                for spec in &rest {
                    keys.push(parse_face_vertex(
                        spec,
                        positions.len(),
                        texcoords.len(),
                        obj_normals.len(),
                    )
                    .map_err(|msg| err(line, msg))?);
                }
                // fan triangulation
                for i in 1..keys.len() - 1 {
                    face_keys.push([keys[0], keys[i], keys[i + 1]]);
                }
            }
            // materials, groups, smoothing flags: ignored
            _ => {}
        }
    }

    if face_keys.is_empty() {
        return Err(Error::Degenerate(format!("{path}: no faces")));
    }

    // Re-index (v, vt, vn) triples into a single vertex stream.
    let mut index_of: std::collections::HashMap<ObjKey, usize> = std::collections::HashMap::new();
    let mut vertices = Vec::new();
    let mut normals: Vec<Option<Vec3>> = Vec::new();
    let mut uvs: Vec<[f64; 2]> = Vec::new();
    let mut vcolors: Vec<Option<Vec3>> = Vec::new();
    let mut faces = Vec::with_capacity(face_keys.len());
    let has_uvs = !texcoords.is_empty();
    for keys in &face_keys {
        let mut tri = [0usize; 3];
        for (slot, key) in tri.iter_mut().zip(keys.iter()) {
            let next = vertices.len();
            let idx = *index_of.entry(*key).or_insert_with(|| {
                vertices.push(positions[key.v]);
                normals.push(key.vn.map(|i| obj_normals[i]));
                uvs.push(key.vt.map(|i| texcoords[i]).unwrap_or([0.0, 0.0]));
                vcolors.push(colors[key.v]);
                next
            });
            *slot = idx;
        }
        faces.push(tri);
    }

    // Fill in missing normals with area-weighted smooth normals.
    let need_smooth = normals.iter().any(|n| n.is_none());
    if need_smooth {
        let smooth = area_weighted_normals(&vertices, &faces);
        for (n, s) in normals.iter_mut().zip(smooth) {
            if n.is_none() {
                *n = Some(s);
            }
        }
    }
    let normals: Vec<Vec3> = normals.into_iter().map(|n| n.unwrap()).collect();

    let any_color = vcolors.iter().any(|c| c.is_some());
    let albedo = if any_color {
        if vcolors.iter().any(|c| c.is_none()) {
            return Err(Error::Format(format!(
                "{path}: vertex colors must be present on all vertices or none"
            )));
        }
        AlbedoSource::PerVertex(vcolors.into_iter().map(|c| c.unwrap()).collect())
    } else if has_uvs {
        // UVs without a bound texture shade as uniform; the texture is
        // attached later via with_texture, which reuses these UVs.
        AlbedoSource::Texture {
            image: ImageBuffer::new(1, 1, 3, vec![0.8, 0.8, 0.8])?,
            uvs,
        }
    } else {
        AlbedoSource::Uniform(Vec3::new(0.8, 0.8, 0.8))
    };

    let mesh = TriangleMesh {
        vertices,
        normals,
        faces,
        albedo,
    };
    mesh.validate()?;
    Ok(mesh)
}

fn parse_face_vertex(
    spec: &str,
    nv: usize,
    nvt: usize,
    nvn: usize,
) -> std::result::Result<ObjKey, String> {
    let parts: Vec<&str> = spec.split('/').collect();
    if parts.len() > 3 {
        return Err(format!("bad face vertex {spec:?}"));
    }
    let index = |s: &str, n: usize, what: &str| -> std::result::Result<usize, String> {
        let i: i64 = s.parse().map_err(|_| format!("bad {what} index {s:?}"))?;
        let resolved = if i > 0 { i as usize - 1 } else { return Err(format!("non-positive {what} index {i}")) };
        if resolved >= n {
            return Err(format!("{what} index {i} out of range (have {n})"));
        }
        Ok(resolved)
    };
    let v = index(parts[0], nv, "vertex")?;
    let vt = match parts.get(1) {
        Some(s) if !s.is_empty() => Some(index(s, nvt, "texcoord")?),
        _ => None,
    };
    let vn = match parts.get(2) {
        Some(s) if !s.is_empty() => Some(index(s, nvn, "normal")?),
        _ => None,
    };
    Ok(ObjKey { v, vt, vn })
}

/// Area-weighted vertex normals: each incident face contributes its
/// (unnormalized) cross product, whose magnitude is twice the face area.
pub fn area_weighted_normals(vertices: &[Vec3], faces: &[[usize; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); vertices.len()];
    for f in faces {
        let e1 = vertices[f[1]] - vertices[f[0]];
        let e2 = vertices[f[2]] - vertices[f[0]];
        let n = e1.cross(&e2);
        for &i in f {
            acc[i] += n;
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 1e-12 {
                n / len
            } else {
                Vec3::new(0.0, 0.0, 1.0)
            }
        })
        .collect()
}

/// Rescale and recenter so the bounding box is centered at the origin and
/// the longest axis spans exactly 2. Normals are unchanged (uniform scale).
pub fn normalize_to_unit_cube(mesh: &TriangleMesh) -> Result<TriangleMesh> {
    let (lo, hi) = mesh.bounding_box();
    let extent = hi - lo;
    let longest = extent.max();
    if !(longest > 0.0) {
        return Err(Error::Degenerate("mesh has zero extent on all axes".into()));
    }
    let center = (lo + hi) * 0.5;
    let scale = 2.0 / longest;
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        *v = (*v - center) * scale;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Camera

/// Pinhole perspective camera. `fov_y` is the full vertical field of view
/// in degrees; `near`/`far` bound the rendered depth range in scene units.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Camera {
    pub position: [f64; 3],
    pub target: [f64; 3],
    pub up: [f64; 3],
    pub fov_y: f64,
    pub near: f64,
    pub far: f64,
    pub width: usize,
    pub height: usize,
}

/// Orthonormal view basis: right, up, forward (camera looks along forward).
#[derive(Debug, Clone, Copy)]
pub struct CameraBasis {
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl Camera {
    pub fn look_at(position: Vec3, target: Vec3, width: usize, height: usize, fov_y: f64) -> Self {
        Camera {
            position: position.into(),
            target: target.into(),
            up: [0.0, 1.0, 0.0],
            fov_y,
            near: 0.1,
            far: 100.0,
            width,
            height,
        }
    }

    pub fn position_v(&self) -> Vec3 {
        Vec3::from(self.position)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov_y > 0.0 && self.fov_y < 180.0) {
            return Err(Error::Config(format!("fov_y {} out of (0, 180)", self.fov_y)));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(Error::Config("need 0 < near < far".into()));
        }
        if (Vec3::from(self.position) - Vec3::from(self.target)).norm() < 1e-12 {
            return Err(Error::Config("camera position equals target".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("zero resolution".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> CameraBasis {
        let forward = (Vec3::from(self.target) - Vec3::from(self.position)).normalize();
        let up_hint = Vec3::from(self.up);
        let mut right = forward.cross(&up_hint);
        if right.norm() < 1e-9 {
            // up parallel to forward; pick any perpendicular
            right = forward.cross(&Vec3::new(1.0, 0.0, 0.0));
            if right.norm() < 1e-9 {
                right = forward.cross(&Vec3::new(0.0, 0.0, 1.0));
            }
        }
        let right = right.normalize();
        let up = right.cross(&forward);
        CameraBasis { right, up, forward }
    }

    pub fn tan_half_fov(&self) -> f64 {
        (self.fov_y.to_radians() * 0.5).tan()
    }

    pub fn aspect(&self) -> f64 {
        self.width as f64 / self.height as f64
    }

    /// Ray through an arbitrary continuous image position, in pixels
    /// ((0,0) is the top-left image corner).
    pub fn ray_through(&self, px: f64, py: f64) -> (Vec3, Vec3) {
        let b = self.basis();
        let t = self.tan_half_fov();
        let ndc_x = (2.0 * px / self.width as f64 - 1.0) * t * self.aspect();
        let ndc_y = (1.0 - 2.0 * py / self.height as f64) * t;
        let dir = (b.forward + b.right * ndc_x + b.up * ndc_y).normalize();
        (self.position_v(), dir)
    }
}

/// Ray through the center of pixel (col, row) under pinhole perspective.
pub fn camera_ray(camera: &Camera, pixel: (usize, usize)) -> (Vec3, Vec3) {
    camera.ray_through(pixel.0 as f64 + 0.5, pixel.1 as f64 + 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TRI_OBJ: &str = "\
v 0 0 0
v 1 0 0
v 0 1 0
vn 0 0 1
f 1//1 2//1 3//1
";

    #[test]
    fn single_triangle_preserves_normals() {
        let mesh = parse_obj(TRI_OBJ, "tri.obj").unwrap();
        assert_eq!(mesh.vertices.len(), 3);
        assert_eq!(mesh.faces.len(), 1);
        for n in &mesh.normals {
            assert_relative_eq!(n.z, 1.0, epsilon = 1e-12);
        }
    }

    /// Cube whose quads are fan-triangulated along diagonals that all meet
    /// at four tetrahedral corners, so area weighting is symmetric and the
    /// smooth normals equal the normalized vertex positions.
    fn symmetric_cube_obj() -> String {
        // vertices of [-1,1]^3; tetra corners are 1 (-1,-1,-1), 4 (1,1,-1),
        // 6 (1,-1,1), 7 (-1,1,1) in 1-based order below
        let verts = [
            [-1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
            [1.0, -1.0, 1.0],
            [-1.0, 1.0, 1.0],
            [1.0, 1.0, 1.0],
        ];
        // each quad listed starting at a tetra corner so the fan diagonal
        // joins two tetra corners
        let quads = [
            [1, 3, 4, 2], // z = -1 face, diagonal 1-4
            [6, 8, 7, 5], // z = +1 face, diagonal 6-7
            [1, 2, 6, 5], // y = -1 face, diagonal 1-6
            [4, 3, 7, 8], // y = +1 face, diagonal 4-7
            [1, 5, 7, 3], // x = -1 face, diagonal 1-7
            [4, 8, 6, 2], // x = +1 face, diagonal 4-6
        ];
        let mut s = String::new();
        for v in verts {
            s.push_str(&format!("v {} {} {}\n", v[0], v[1], v[2]));
        }
        for q in quads {
            s.push_str(&format!("f {} {} {} {}\n", q[0], q[1], q[2], q[3]));
        }
        s
    }

    #[test]
    fn cube_without_normals_gets_radial_smooth_normals() {
        let mesh = parse_obj(&symmetric_cube_obj(), "cube.obj").unwrap();
        assert_eq!(mesh.vertices.len(), 8);
        for (v, n) in mesh.vertices.iter().zip(&mesh.normals) {
            let expect = v.normalize();
            assert_relative_eq!((n - expect).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quads_triangulate_to_two_faces_each() {
        let mesh = parse_obj(&symmetric_cube_obj(), "cube.obj").unwrap();
        assert_eq!(mesh.faces.len(), 12); // 6 quads -> 12 triangles
    }

    #[test]
    fn vertex_colors_become_per_vertex_albedo() {
        let obj = "\
v 0 0 0 1 0 0
v 1 0 0 0 1 0
v 0 1 0 0 0 1
f 1 2 3
";
        let mesh = parse_obj(obj, "c.obj").unwrap();
        match &mesh.albedo {
            AlbedoSource::PerVertex(c) => {
                assert_eq!(c[0], Vec3::new(1.0, 0.0, 0.0));
                assert_eq!(c[2], Vec3::new(0.0, 0.0, 1.0));
            }
            other => panic!("expected per-vertex albedo, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let obj = "v 0 0 0\nv 1 0 0\nf 1 2 nonsense\n";
        match parse_obj(obj, "bad.obj") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_mesh_is_an_error() {
        assert!(matches!(
            parse_obj("v 0 0 0\n", "empty.obj"),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn normalize_scales_into_unit_cube() {
        let mut mesh = parse_obj(TRI_OBJ, "t.obj").unwrap();
        for v in &mut mesh.vertices {
            *v = *v * 10.0; // bbox [0,10]x[0,10]x{0} would be degenerate in z
        }
        // give it depth so the box is [0,10]^3
        mesh.vertices[0].z = 10.0;
        let norm = normalize_to_unit_cube(&mesh).unwrap();
        let (lo, hi) = norm.bounding_box();
        assert_relative_eq!(lo.x, -1.0, epsilon = 1e-12);
        assert_relative_eq!(hi.max(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn normalize_anisotropic_box() {
        // bbox [0,4]x[0,2]x[0,2] -> [-1,1]x[-0.5,0.5]x[-0.5,0.5]
        let mesh = TriangleMesh {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(4.0, 2.0, 0.0),
                Vec3::new(4.0, 0.0, 2.0),
            ],
            normals: vec![Vec3::new(0.0, 0.0, 1.0); 3],
            faces: vec![[0, 1, 2]],
            albedo: AlbedoSource::Uniform(Vec3::repeat(0.5)),
        };
        let norm = normalize_to_unit_cube(&mesh).unwrap();
        let (lo, hi) = norm.bounding_box();
        assert_relative_eq!(lo.x, -1.0, epsilon = 1e-12);
        assert_relative_eq!(hi.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(lo.y, -0.5, epsilon = 1e-12);
        assert_relative_eq!(hi.z, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn normalize_is_idempotent() {
        let mesh = parse_obj(&symmetric_cube_obj(), "cube.obj").unwrap();
        let once = normalize_to_unit_cube(&mesh).unwrap();
        let twice = normalize_to_unit_cube(&once).unwrap();
        for (a, b) in once.vertices.iter().zip(&twice.vertices) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn degenerate_mesh_rejected_by_normalize() {
        let mesh = TriangleMesh {
            vertices: vec![Vec3::zeros(); 3],
            normals: vec![Vec3::new(0.0, 0.0, 1.0); 3],
            faces: vec![[0, 1, 2]],
            albedo: AlbedoSource::Uniform(Vec3::repeat(0.5)),
        };
        assert!(normalize_to_unit_cube(&mesh).is_err());
    }

    fn test_camera(width: usize, height: usize, fov_y: f64) -> Camera {
        Camera::look_at(Vec3::new(0.0, 0.0, 3.0), Vec3::zeros(), width, height, fov_y)
    }

    #[test]
    fn center_pixel_is_optical_axis() {
        let cam = test_camera(101, 101, 47.0);
        let (_, dir) = camera_ray(&cam, (50, 50));
        let axis = (Vec3::zeros() - cam.position_v()).normalize();
        assert!((dir - axis).norm() < 1e-12);
    }

    #[test]
    fn top_center_pixel_elevation_at_fov_90() {
        let h = 64usize;
        let cam = test_camera(h, h, 90.0);
        let (_, dir) = cam.ray_through(h as f64 / 2.0, 0.5);
        // tan(fov/2) = 1; image-plane y at the top pixel center is 1 - 1/h
        let expect = (1.0 - 1.0 / h as f64).atan();
        let b = cam.basis();
        let elevation = dir.dot(&b.up).atan2(dir.dot(&b.forward));
        assert_relative_eq!(elevation, expect, epsilon = 1e-12);
    }

    #[test]
    fn mirrored_pixels_give_mirrored_directions() {
        let cam = test_camera(64, 48, 55.0);
        let b = cam.basis();
        let (_, d1) = camera_ray(&cam, (10, 17));
        let (_, d2) = camera_ray(&cam, (64 - 1 - 10, 17));
        assert_relative_eq!(d1.dot(&b.right), -d2.dot(&b.right), epsilon = 1e-12);
        assert_relative_eq!(d1.dot(&b.up), d2.dot(&b.up), epsilon = 1e-12);
        assert_relative_eq!(d1.dot(&b.forward), d2.dot(&b.forward), epsilon = 1e-12);
    }

    #[test]
    fn rays_stay_inside_diagonal_fov_cone() {
        let cam = test_camera(37, 23, 70.0);
        let t = cam.tan_half_fov();
        let half_diag = (t * t * (cam.aspect() * cam.aspect() + 1.0)).sqrt().atan();
        let b = cam.basis();
        for row in 0..cam.height {
            for col in 0..cam.width {
                let (_, d) = camera_ray(&cam, (col, row));
                let angle = d.dot(&b.forward).clamp(-1.0, 1.0).acos();
                assert!(angle <= half_diag + 1e-9);
            }
        }
    }
}
