//! Singular signed measures on the plane: weighted point clouds and
//! polyline-supported line densities.
//!
//! Curves are polylines with piecewise-constant density, so ball masses and
//! the per-segment integrals used elsewhere are exact; all discretization
//! error lives in the geometric refinement of the polyline. Ball queries use
//! the open-ball convention: atoms exactly on the boundary are excluded and
//! chords are clipped to the strict interior.
//!
//! A zero-density segment carries no mass. Generators and `restrict` use such
//! segments as connectors when the support of a single polyline has gaps.

use crate::geom::{clip_segment_to_disc, PlanePoint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for the unit-vector check in the velocity-jump helpers.
const UNIT_TOL: f64 = 1e-12;

/// Relative tolerance when cross-checking stored cumulative vorticity
/// against the densities at load time.
pub const CUMULATIVE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("{what} must be a unit vector, |v| = {norm}")]
    NotUnit { what: &'static str, norm: f64 },
    #[error("vertex index {index} out of range for curve with {len} vertices")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("atom weight must be finite and nonzero, got {0}")]
    InvalidWeight(f64),
    #[error("a curve needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("consecutive vertices must be distinct (segment {0} has zero length)")]
    DegenerateSegment(usize),
    #[error("expected {expected} densities for {vertices} vertices, got {got}")]
    LengthMismatch {
        vertices: usize,
        expected: usize,
        got: usize,
    },
    #[error("refinement factor must be >= 2, got {0}")]
    InvalidRefineFactor(usize),
    #[error(
        "stored cumulative vorticity disagrees with densities at vertex {index}: \
         {given} vs recomputed {recomputed}"
    )]
    CumulativeMismatch {
        index: usize,
        given: f64,
        recomputed: f64,
    },
    #[error("radii must be positive, finite, and ascending")]
    BadRadii,
}

/// Weighted point cloud: the discrete stand-in for a signed Radon measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<(PlanePoint, f64)>,
}

impl AtomicMeasure {
    /// Builds from `(position, weight)` pairs. Weights must be finite and
    /// nonzero; positions finite.
    pub fn new(atoms: Vec<(PlanePoint, f64)>) -> Result<Self, MeasureError> {
        for (p, w) in &atoms {
            if !p.is_finite() {
                return Err(MeasureError::NonFinite("atom position"));
            }
            if !w.is_finite() || *w == 0.0 {
                return Err(MeasureError::InvalidWeight(*w));
            }
        }
        Ok(AtomicMeasure { atoms })
    }

    pub fn empty() -> Self {
        AtomicMeasure { atoms: Vec::new() }
    }

    /// Single unit mass at a point.
    pub fn dirac(at: PlanePoint) -> Self {
        AtomicMeasure {
            atoms: vec![(at, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[(PlanePoint, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Signed mass of the open ball `B(center, r)`.
    pub fn ball_mass(&self, center: PlanePoint, r: f64) -> Result<f64, MeasureError> {
        validate_ball(center, r)?;
        let r2 = r * r;
        Ok(self
            .atoms
            .iter()
            .filter(|(p, _)| (*p - center).norm2() < r2)
            .map(|(_, w)| w)
            .sum())
    }

    /// Ball masses at an ascending list of radii, sharing one pass.
    pub fn ball_mass_profile(
        &self,
        center: PlanePoint,
        radii: &[f64],
    ) -> Result<Vec<f64>, MeasureError> {
        validate_radii(center, radii)?;
        let mut out = vec![0.0; radii.len()];
        for (p, w) in &self.atoms {
            let d = (*p - center).norm();
            // First radius with r > d gets the atom; all larger ones too.
            let idx = radii.partition_point(|&r| r <= d);
            for slot in &mut out[idx..] {
                *slot += w;
            }
        }
        Ok(out)
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w.abs()).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// Splits into positive and negative parts; `positive - negative`
    /// reproduces the input exactly.
    pub fn hahn_decompose(&self) -> SignedDecomposition<AtomicMeasure> {
        let positive = self
            .atoms
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .cloned()
            .collect();
        let negative = self
            .atoms
            .iter()
            .filter(|(_, w)| *w < 0.0)
            .map(|(p, w)| (*p, -w))
            .collect();
        SignedDecomposition {
            positive: AtomicMeasure { atoms: positive },
            negative: AtomicMeasure { atoms: negative },
        }
    }

    /// Restriction to the open ball `B(center, r0)`.
    pub fn restrict(&self, center: PlanePoint, r0: f64) -> Result<AtomicMeasure, MeasureError> {
        validate_ball(center, r0)?;
        let r2 = r0 * r0;
        Ok(AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .filter(|(p, _)| (*p - center).norm2() < r2)
                .cloned()
                .collect(),
        })
    }

    /// Total variation measure |mu|.
    pub fn abs_measure(&self) -> AtomicMeasure {
        AtomicMeasure {
            atoms: self.atoms.iter().map(|(p, w)| (*p, w.abs())).collect(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.atoms.iter().all(|(_, w)| *w >= 0.0)
    }
}

/// Oriented polyline segment with its constant line density.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub a: PlanePoint,
    pub b: PlanePoint,
    pub density: f64,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn midpoint(&self) -> PlanePoint {
        self.a.lerp(self.b, 0.5)
    }

    /// Signed mass carried by the segment.
    pub fn mass(&self) -> f64 {
        self.density * self.len()
    }
}

/// Polyline-supported signed measure with piecewise-constant line density
/// and the cumulated vorticity (prefix integral of the density along the
/// traversal, anchored to zero at the first vertex).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeasure {
    vertices: Vec<PlanePoint>,
    densities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CurveMeasure {
    /// Builds from vertices and per-segment densities; the cumulative
    /// vorticity is the prefix integral of `density * length`.
    pub fn new(vertices: Vec<PlanePoint>, densities: Vec<f64>) -> Result<Self, MeasureError> {
        validate_polyline(&vertices, &densities)?;
        let mut cumulative = Vec::with_capacity(vertices.len());
        if !vertices.is_empty() {
            cumulative.push(0.0);
            for (k, d) in densities.iter().enumerate() {
                let len = vertices[k].dist(vertices[k + 1]);
                cumulative.push(cumulative[k] + d * len);
            }
        }
        Ok(CurveMeasure {
            vertices,
            densities,
            cumulative,
        })
    }

    /// Builds with an explicitly supplied cumulative vorticity, cross-checked
    /// against the densities at relative tolerance [`CUMULATIVE_REL_TOL`].
    pub fn with_cumulative(
        vertices: Vec<PlanePoint>,
        densities: Vec<f64>,
        cumulative: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        validate_polyline(&vertices, &densities)?;
        if cumulative.len() != vertices.len() {
            return Err(MeasureError::LengthMismatch {
                vertices: vertices.len(),
                expected: vertices.len(),
                got: cumulative.len(),
            });
        }
        let recomputed = CurveMeasure::new(vertices.clone(), densities.clone())?;
        let scale = recomputed
            .cumulative
            .iter()
            .fold(1.0_f64, |m, c| m.max(c.abs()));
        for (k, (&given, &rec)) in cumulative.iter().zip(&recomputed.cumulative).enumerate() {
            if !given.is_finite() {
                return Err(MeasureError::NonFinite("cumulative vorticity"));
            }
            if (given - rec).abs() > CUMULATIVE_REL_TOL * scale {
                return Err(MeasureError::CumulativeMismatch {
                    index: k,
                    given,
                    recomputed: rec,
                });
            }
        }
        Ok(CurveMeasure {
            vertices,
            densities,
            cumulative,
        })
    }

    /// Construction bypass for generators whose cumulative values are exact
    /// by design; the caller guarantees consistency.
    pub(crate) fn from_trusted_parts(
        vertices: Vec<PlanePoint>,
        densities: Vec<f64>,
        cumulative: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(vertices.len(), cumulative.len());
        debug_assert_eq!(vertices.len().saturating_sub(1), densities.len());
        CurveMeasure {
            vertices,
            densities,
            cumulative,
        }
    }

    pub fn empty() -> Self {
        CurveMeasure {
            vertices: Vec::new(),
            densities: Vec::new(),
            cumulative: Vec::new(),
        }
    }

    pub fn vertices(&self) -> &[PlanePoint] {
        &self.vertices
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn n_segments(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.densities.iter().enumerate().map(move |(k, &d)| Segment {
            a: self.vertices[k],
            b: self.vertices[k + 1],
            density: d,
        })
    }

    /// Stored prefix integral of the density along arc length up to the
    /// given vertex.
    pub fn cumulative_gamma(&self, index: usize) -> Result<f64, MeasureError> {
        self.cumulative
            .get(index)
            .copied()
            .ok_or(MeasureError::IndexOutOfRange {
                index,
                len: self.vertices.len(),
            })
    }

    /// Signed mass of the open ball `B(center, r)`: exact sum of
    /// `density * (chord length strictly inside)` over all segments.
    pub fn ball_mass(&self, center: PlanePoint, r: f64) -> Result<f64, MeasureError> {
        validate_ball(center, r)?;
        let mut acc = 0.0;
        for seg in self.segments() {
            if seg.density == 0.0 {
                continue;
            }
            if let Some((t0, t1)) = clip_segment_to_disc(seg.a, seg.b, center, r) {
                acc += seg.density * seg.len() * (t1 - t0);
            }
        }
        Ok(acc)
    }

    /// Ball masses at an ascending list of radii. Each segment contributes to
    /// the radius window between its nearest and farthest approach only, so
    /// the cost is `O(n_seg * (log n_r + window))`.
    pub fn ball_mass_profile(
        &self,
        center: PlanePoint,
        radii: &[f64],
    ) -> Result<Vec<f64>, MeasureError> {
        validate_radii(center, radii)?;
        let mut out = vec![0.0; radii.len()];
        for seg in self.segments() {
            if seg.density == 0.0 {
                continue;
            }
            let len = seg.len();
            let dmin = crate::geom::point_segment_dist2(center, seg.a, seg.b).sqrt();
            let dmax = (seg.a - center).norm().max((seg.b - center).norm());
            let lo = radii.partition_point(|&r| r <= dmin);
            let hi = radii.partition_point(|&r| r <= dmax);
            for (i, &r) in radii[lo..hi].iter().enumerate() {
                if let Some((t0, t1)) = clip_segment_to_disc(seg.a, seg.b, center, r) {
                    out[lo + i] += seg.density * len * (t1 - t0);
                }
            }
            let full = seg.density * len;
            for slot in &mut out[hi..] {
                *slot += full;
            }
        }
        Ok(out)
    }

    pub fn total_variation(&self) -> f64 {
        self.segments().map(|s| s.mass().abs()).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.segments().map(|s| s.mass()).sum()
    }

    /// Splits by density sign on the shared geometry: the parts keep every
    /// vertex, with the opposite-sign segments set to zero density, so
    /// `positive - negative` reproduces the input densities exactly.
    pub fn hahn_decompose(&self) -> SignedDecomposition<CurveMeasure> {
        if self.is_empty() {
            return SignedDecomposition {
                positive: CurveMeasure::empty(),
                negative: CurveMeasure::empty(),
            };
        }
        let pos: Vec<f64> = self.densities.iter().map(|d| d.max(0.0)).collect();
        let neg: Vec<f64> = self.densities.iter().map(|d| (-d).max(0.0)).collect();
        SignedDecomposition {
            positive: CurveMeasure::new(self.vertices.clone(), pos)
                .expect("sign clamp preserves polyline validity"),
            negative: CurveMeasure::new(self.vertices.clone(), neg)
                .expect("sign clamp preserves polyline validity"),
        }
    }

    /// Total variation measure |mu| on the same geometry.
    pub fn abs_measure(&self) -> CurveMeasure {
        if self.is_empty() {
            return CurveMeasure::empty();
        }
        CurveMeasure::new(
            self.vertices.clone(),
            self.densities.iter().map(|d| d.abs()).collect(),
        )
        .expect("abs preserves polyline validity")
    }

    /// Restriction to the open ball `B(center, r0)`: segments crossing the
    /// circle are split at the intersection with densities preserved; pieces
    /// separated by removed material are bridged with zero-density
    /// connectors; the cumulative vorticity is recomputed from the new start.
    pub fn restrict(&self, center: PlanePoint, r0: f64) -> Result<CurveMeasure, MeasureError> {
        validate_ball(center, r0)?;
        let mut verts: Vec<PlanePoint> = Vec::new();
        let mut dens: Vec<f64> = Vec::new();
        for seg in self.segments() {
            let Some((t0, t1)) = clip_segment_to_disc(seg.a, seg.b, center, r0) else {
                continue;
            };
            if t1 - t0 <= 1e-14 {
                continue;
            }
            // Endpoint parameters 0/1 reuse the original vertices bit-exactly
            // so contiguous kept pieces stay joined.
            let p0 = if t0 == 0.0 { seg.a } else { seg.a.lerp(seg.b, t0) };
            let p1 = if t1 == 1.0 { seg.b } else { seg.a.lerp(seg.b, t1) };
            match verts.last() {
                None => verts.push(p0),
                Some(&last) if last == p0 => {}
                Some(_) => {
                    // Gap in the kept support: bridge with a massless connector.
                    dens.push(0.0);
                    verts.push(p0);
                }
            }
            dens.push(seg.density);
            verts.push(p1);
        }
        if verts.len() < 2 {
            return Ok(CurveMeasure::empty());
        }
        CurveMeasure::new(verts, dens)
    }

    /// Splits every segment into `factor` equal subsegments. Densities stay
    /// constant on the children and the cumulative vorticity at the original
    /// vertices is preserved exactly.
    pub fn refine(&self, factor: usize) -> Result<CurveMeasure, MeasureError> {
        if factor < 2 {
            return Err(MeasureError::InvalidRefineFactor(factor));
        }
        if self.is_empty() {
            return Ok(CurveMeasure::empty());
        }
        let n = self.n_segments();
        let mut verts = Vec::with_capacity(n * factor + 1);
        let mut dens = Vec::with_capacity(n * factor);
        let mut cum = Vec::with_capacity(n * factor + 1);
        verts.push(self.vertices[0]);
        cum.push(0.0);
        for (k, seg) in self.segments().enumerate() {
            let mass = seg.density * seg.len();
            for j in 1..=factor {
                let t = j as f64 / factor as f64;
                verts.push(if j == factor { seg.b } else { seg.a.lerp(seg.b, t) });
                dens.push(seg.density);
                cum.push(self.cumulative[k] + mass * t);
            }
            // Pin the parent vertex value exactly.
            *cum.last_mut().unwrap() = self.cumulative[k + 1];
        }
        validate_polyline(&verts, &dens)?;
        Ok(CurveMeasure::from_trusted_parts(verts, dens, cum))
    }

    /// Inverse of `refine`: keeps every `factor`-th vertex (plus the last),
    /// recomputing densities from the preserved cumulative vorticity, so the
    /// coarse curve carries exactly the same mass between kept vertices.
    pub fn decimate(&self, factor: usize) -> Result<CurveMeasure, MeasureError> {
        if factor < 2 {
            return Err(MeasureError::InvalidRefineFactor(factor));
        }
        if self.is_empty() {
            return Ok(CurveMeasure::empty());
        }
        let n = self.vertices.len();
        let mut idx: Vec<usize> = (0..n).step_by(factor).collect();
        if *idx.last().unwrap() != n - 1 {
            idx.push(n - 1);
        }
        let verts: Vec<PlanePoint> = idx.iter().map(|&i| self.vertices[i]).collect();
        let cum: Vec<f64> = idx.iter().map(|&i| self.cumulative[i]).collect();
        let mut dens = Vec::with_capacity(verts.len() - 1);
        for k in 0..verts.len() - 1 {
            let len = verts[k].dist(verts[k + 1]);
            if len == 0.0 {
                return Err(MeasureError::DegenerateSegment(k));
            }
            dens.push((cum[k + 1] - cum[k]) / len);
        }
        validate_polyline(&verts, &dens)?;
        Ok(CurveMeasure::from_trusted_parts(verts, dens, cum))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.densities.iter().all(|d| *d >= 0.0)
    }
}

/// Positive/negative parts of a signed measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignedDecomposition<M> {
    pub positive: M,
    pub negative: M,
}

/// Runtime union of the two measure kinds, the common currency of the
/// analysis routines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Measure {
    Atomic(AtomicMeasure),
    Curve(CurveMeasure),
}

impl From<AtomicMeasure> for Measure {
    fn from(m: AtomicMeasure) -> Self {
        Measure::Atomic(m)
    }
}

impl From<CurveMeasure> for Measure {
    fn from(m: CurveMeasure) -> Self {
        Measure::Curve(m)
    }
}

impl Measure {
    pub fn ball_mass(&self, center: PlanePoint, r: f64) -> Result<f64, MeasureError> {
        match self {
            Measure::Atomic(m) => m.ball_mass(center, r),
            Measure::Curve(m) => m.ball_mass(center, r),
        }
    }

    pub fn ball_mass_profile(
        &self,
        center: PlanePoint,
        radii: &[f64],
    ) -> Result<Vec<f64>, MeasureError> {
        match self {
            Measure::Atomic(m) => m.ball_mass_profile(center, radii),
            Measure::Curve(m) => m.ball_mass_profile(center, radii),
        }
    }

    pub fn total_variation(&self) -> f64 {
        match self {
            Measure::Atomic(m) => m.total_variation(),
            Measure::Curve(m) => m.total_variation(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Measure::Atomic(m) => m.total_mass(),
            Measure::Curve(m) => m.total_mass(),
        }
    }

    pub fn hahn_decompose(&self) -> SignedDecomposition<Measure> {
        match self {
            Measure::Atomic(m) => {
                let d = m.hahn_decompose();
                SignedDecomposition {
                    positive: d.positive.into(),
                    negative: d.negative.into(),
                }
            }
            Measure::Curve(m) => {
                let d = m.hahn_decompose();
                SignedDecomposition {
                    positive: d.positive.into(),
                    negative: d.negative.into(),
                }
            }
        }
    }

    pub fn abs_measure(&self) -> Measure {
        match self {
            Measure::Atomic(m) => m.abs_measure().into(),
            Measure::Curve(m) => m.abs_measure().into(),
        }
    }

    pub fn restrict(&self, center: PlanePoint, r0: f64) -> Result<Measure, MeasureError> {
        match self {
            Measure::Atomic(m) => Ok(m.restrict(center, r0)?.into()),
            Measure::Curve(m) => Ok(m.restrict(center, r0)?.into()),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            Measure::Atomic(m) => m.is_nonnegative(),
            Measure::Curve(m) => m.is_nonnegative(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Measure::Atomic(m) => m.is_empty(),
            Measure::Curve(m) => m.is_empty(),
        }
    }

    /// Points carrying the support (atom positions or polyline vertices).
    pub fn support_points(&self) -> Vec<PlanePoint> {
        match self {
            Measure::Atomic(m) => m.atoms().iter().map(|(p, _)| *p).collect(),
            Measure::Curve(m) => m.vertices().to_vec(),
        }
    }

    /// Largest distance from `center` to the support.
    pub fn max_radius_about(&self, center: PlanePoint) -> f64 {
        self.support_points()
            .iter()
            .map(|p| p.dist(center))
            .fold(0.0, f64::max)
    }

    /// Support diameter (max pairwise distance over support points).
    pub fn diameter(&self) -> f64 {
        let pts = self.support_points();
        let mut d2 = 0.0_f64;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                d2 = d2.max((pts[i] - pts[j]).norm2());
            }
        }
        d2.sqrt()
    }

    /// Mass centroid of |mu|; origin for the empty measure.
    pub fn abs_centroid(&self) -> PlanePoint {
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut tot = 0.0;
        match self {
            Measure::Atomic(m) => {
                for (p, w) in m.atoms() {
                    let a = w.abs();
                    cx += a * p.x;
                    cy += a * p.y;
                    tot += a;
                }
            }
            Measure::Curve(m) => {
                for seg in m.segments() {
                    let a = seg.mass().abs();
                    let mid = seg.midpoint();
                    cx += a * mid.x;
                    cy += a * mid.y;
                    tot += a;
                }
            }
        }
        if tot > 0.0 {
            PlanePoint::new(cx / tot, cy / tot)
        } else {
            PlanePoint::ORIGIN
        }
    }
}

/// Tangential velocity jump `(v+ - v-) . tau`: the sheet strength, i.e. the
/// line density of the vorticity measure.
pub fn sheet_strength(
    v_plus: PlanePoint,
    v_minus: PlanePoint,
    tangent: PlanePoint,
) -> Result<f64, MeasureError> {
    jump_component(v_plus, v_minus, tangent, "tangent")
}

/// Normal velocity jump `(v+ - v-) . n`; a diagnostic expected to vanish for
/// divergence-free fields.
pub fn normal_jump(
    v_plus: PlanePoint,
    v_minus: PlanePoint,
    normal: PlanePoint,
) -> Result<f64, MeasureError> {
    jump_component(v_plus, v_minus, normal, "normal")
}

fn jump_component(
    v_plus: PlanePoint,
    v_minus: PlanePoint,
    dir: PlanePoint,
    what: &'static str,
) -> Result<f64, MeasureError> {
    if !(v_plus.is_finite() && v_minus.is_finite() && dir.is_finite()) {
        return Err(MeasureError::NonFinite("velocity or direction"));
    }
    let norm = dir.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(MeasureError::NotUnit { what, norm });
    }
    Ok((v_plus - v_minus).dot(dir))
}

fn validate_ball(center: PlanePoint, r: f64) -> Result<(), MeasureError> {
    if !center.is_finite() {
        return Err(MeasureError::NonFinite("ball center"));
    }
    if !r.is_finite() || r <= 0.0 {
        return Err(MeasureError::InvalidRadius(r));
    }
    Ok(())
}

fn validate_radii(center: PlanePoint, radii: &[f64]) -> Result<(), MeasureError> {
    if !center.is_finite() {
        return Err(MeasureError::NonFinite("ball center"));
    }
    let ascending = radii.windows(2).all(|w| w[0] < w[1]);
    if !ascending || radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(MeasureError::BadRadii);
    }
    Ok(())
}

fn validate_polyline(vertices: &[PlanePoint], densities: &[f64]) -> Result<(), MeasureError> {
    if vertices.is_empty() {
        if densities.is_empty() {
            return Ok(());
        }
        return Err(MeasureError::LengthMismatch {
            vertices: 0,
            expected: 0,
            got: densities.len(),
        });
    }
    if vertices.len() < 2 {
        return Err(MeasureError::TooFewVertices(vertices.len()));
    }
    if densities.len() != vertices.len() - 1 {
        return Err(MeasureError::LengthMismatch {
            vertices: vertices.len(),
            expected: vertices.len() - 1,
            got: densities.len(),
        });
    }
    for v in vertices {
        if !v.is_finite() {
            return Err(MeasureError::NonFinite("vertex"));
        }
    }
    for d in densities {
        if !d.is_finite() {
            return Err(MeasureError::NonFinite("density"));
        }
    }
    for (k, w) in vertices.windows(2).enumerate() {
        if w[0] == w[1] {
            return Err(MeasureError::DegenerateSegment(k));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_segment() -> CurveMeasure {
        CurveMeasure::new(
            vec![PlanePoint::ORIGIN, PlanePoint::new(1.0, 0.0)],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn dirac_ball_mass() {
        let mu = AtomicMeasure::dirac(PlanePoint::ORIGIN);
        assert_eq!(mu.ball_mass(PlanePoint::ORIGIN, 1.0).unwrap(), 1.0);
        // Open ball: an atom on the boundary is excluded.
        let shifted = AtomicMeasure::dirac(PlanePoint::new(1.0, 0.0));
        assert_eq!(shifted.ball_mass(PlanePoint::ORIGIN, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn ball_mass_rejects_bad_input() {
        let mu = AtomicMeasure::dirac(PlanePoint::ORIGIN);
        assert!(mu.ball_mass(PlanePoint::ORIGIN, 0.0).is_err());
        assert!(mu.ball_mass(PlanePoint::ORIGIN, f64::NAN).is_err());
        assert!(mu
            .ball_mass(PlanePoint::new(f64::INFINITY, 0.0), 1.0)
            .is_err());
    }

    #[test]
    fn circle_misses_small_ball() {
        let mu = crate::spirals::circle_measure(1.0, 1.0, 64).unwrap();
        assert_eq!(mu.ball_mass(PlanePoint::ORIGIN, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn segment_clipping_mass() {
        let mu = CurveMeasure::new(
            vec![PlanePoint::ORIGIN, PlanePoint::new(2.0, 0.0)],
            vec![1.0],
        )
        .unwrap();
        let m = mu.ball_mass(PlanePoint::ORIGIN, 1.0).unwrap();
        assert!((m - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hahn_split_totals() {
        let mu = AtomicMeasure::new(vec![
            (PlanePoint::new(0.0, 0.0), 1.0),
            (PlanePoint::new(1.0, 0.0), -2.0),
        ])
        .unwrap();
        let d = mu.hahn_decompose();
        assert_eq!(d.positive.total_variation(), 1.0);
        assert_eq!(d.negative.total_variation(), 2.0);
        assert_eq!(mu.total_variation(), 3.0);
    }

    #[test]
    fn hahn_all_positive_is_identity() {
        let mu = AtomicMeasure::new(vec![
            (PlanePoint::new(0.0, 0.0), 1.0),
            (PlanePoint::new(1.0, 0.0), 0.5),
        ])
        .unwrap();
        let d = mu.hahn_decompose();
        assert_eq!(d.positive, mu);
        assert!(d.negative.is_empty());
    }

    #[test]
    fn empty_total_variation() {
        assert_eq!(AtomicMeasure::empty().total_variation(), 0.0);
        assert_eq!(CurveMeasure::empty().total_variation(), 0.0);
    }

    #[test]
    fn restrict_inside_outside() {
        let mu = unit_segment();
        let inside = mu.restrict(PlanePoint::new(0.5, 0.0), 10.0).unwrap();
        assert_eq!(inside, mu);
        let outside = mu.restrict(PlanePoint::new(50.0, 0.0), 1.0).unwrap();
        assert!(outside.is_empty());
    }

    #[test]
    fn restrict_splits_at_circle() {
        let mu = CurveMeasure::new(
            vec![PlanePoint::ORIGIN, PlanePoint::new(2.0, 0.0)],
            vec![1.0],
        )
        .unwrap();
        let r = mu.restrict(PlanePoint::ORIGIN, 1.0).unwrap();
        assert_eq!(r.vertices().len(), 2);
        assert!((r.vertices()[1].x - 1.0).abs() < 1e-12);
        assert!((r.total_variation() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restrict_bridges_gaps_with_massless_connectors() {
        // Zig-zag crossing the disc twice: the kept pieces are disjoint.
        let mu = CurveMeasure::new(
            vec![
                PlanePoint::new(-3.0, 0.5),
                PlanePoint::new(0.0, 0.5),
                PlanePoint::new(0.0, 3.0),
                PlanePoint::new(0.5, 3.0),
                PlanePoint::new(0.5, 0.0),
            ],
            vec![1.0, 1.0, 1.0, 1.0],
        )
        .unwrap();
        let r = mu.restrict(PlanePoint::ORIGIN, 1.0).unwrap();
        assert!(r.densities().iter().any(|d| *d == 0.0));
        // Mass inside is preserved by the split.
        let before = mu.ball_mass(PlanePoint::ORIGIN, 1.0).unwrap();
        let after = r.total_variation();
        assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn cumulative_gamma_prefix() {
        let mu = CurveMeasure::new(
            vec![
                PlanePoint::ORIGIN,
                PlanePoint::new(0.7, 0.0),
                PlanePoint::new(1.0, 0.0),
            ],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(mu.cumulative_gamma(0).unwrap(), 0.0);
        assert!((mu.cumulative_gamma(1).unwrap() - 0.7).abs() < 1e-15);
        assert!(mu.cumulative_gamma(3).is_err());
    }

    #[test]
    fn refine_preserves_mass_and_cumulative() {
        let mu = CurveMeasure::new(
            vec![
                PlanePoint::ORIGIN,
                PlanePoint::new(1.0, 0.3),
                PlanePoint::new(1.5, -0.2),
            ],
            vec![2.0, -0.5],
        )
        .unwrap();
        let r = mu.refine(2).unwrap();
        assert_eq!(r.n_segments(), 4);
        assert!((r.total_variation() - mu.total_variation()).abs() < 1e-12);
        // Cumulative at original vertices is pinned exactly.
        assert_eq!(r.cumulative_gamma(2).unwrap(), mu.cumulative_gamma(1).unwrap());
        assert_eq!(r.cumulative_gamma(4).unwrap(), mu.cumulative_gamma(2).unwrap());
        // refine(2) twice matches refine(4) up to rounding.
        let r22 = r.refine(2).unwrap();
        let r4 = mu.refine(4).unwrap();
        assert_eq!(r22.vertices().len(), r4.vertices().len());
        for (a, b) in r22.vertices().iter().zip(r4.vertices()) {
            assert!(a.dist(*b) < 1e-14);
        }
    }

    #[test]
    fn refine_rejects_factor_below_two() {
        assert!(unit_segment().refine(1).is_err());
    }

    #[test]
    fn decimate_inverts_refine_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mu = random_curve(&mut rng, 12, true);
        let coarse = mu.refine(4).unwrap().decimate(4).unwrap();
        assert_eq!(coarse.vertices().len(), mu.vertices().len());
        assert!((coarse.total_variation() - mu.total_variation()).abs() < 1e-12);
        for (a, b) in coarse.cumulative().iter().zip(mu.cumulative()) {
            assert!((a - b).abs() < 1e-12);
        }
        // Decimation preserves vertex-anchored cumulative mass even when it
        // is not a refine inverse.
        let dec = mu.decimate(3).unwrap();
        assert_eq!(
            dec.cumulative().last().unwrap(),
            mu.cumulative().last().unwrap()
        );
    }

    #[test]
    fn sheet_strength_examples() {
        let e = |x, y| PlanePoint::new(x, y);
        assert_eq!(
            sheet_strength(e(1.0, 0.0), e(-1.0, 0.0), e(1.0, 0.0)).unwrap(),
            2.0
        );
        assert_eq!(
            sheet_strength(e(0.3, 0.7), e(0.3, 0.7), e(0.0, 1.0)).unwrap(),
            0.0
        );
        assert_eq!(
            sheet_strength(e(0.0, 3.0), e(0.0, 1.0), e(0.0, 1.0)).unwrap(),
            2.0
        );
        assert!(sheet_strength(e(1.0, 0.0), e(0.0, 0.0), e(0.5, 0.0)).is_err());
    }

    #[test]
    fn normal_jump_examples() {
        let e = |x, y| PlanePoint::new(x, y);
        assert_eq!(
            normal_jump(e(1.0, 0.0), e(-1.0, 0.0), e(0.0, 1.0)).unwrap(),
            0.0
        );
        assert_eq!(
            normal_jump(e(0.0, 1.0), e(0.0, 0.0), e(0.0, 1.0)).unwrap(),
            1.0
        );
        assert_eq!(normal_jump(e(0.2, 0.4), e(0.2, 0.4), e(1.0, 0.0)).unwrap(), 0.0);
    }

    fn random_curve(rng: &mut ChaCha8Rng, n: usize, signed: bool) -> CurveMeasure {
        let mut verts = vec![PlanePoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))];
        for _ in 0..n {
            let last = *verts.last().unwrap();
            verts.push(PlanePoint::new(
                last.x + rng.gen_range(0.05..0.3),
                last.y + rng.gen_range(-0.2..0.2),
            ));
        }
        let dens = (0..n)
            .map(|_| {
                let d = rng.gen_range(0.1..2.0);
                if signed && rng.gen_bool(0.4) {
                    -d
                } else {
                    d
                }
            })
            .collect();
        CurveMeasure::new(verts, dens).unwrap()
    }

    #[test]
    fn ball_mass_monotone_and_saturates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mu = random_curve(&mut rng, 12, false);
            let center = PlanePoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let mut prev = 0.0;
            for k in 1..=30 {
                let r = 0.3 * k as f64;
                let m = mu.ball_mass(center, r).unwrap();
                assert!(m + 1e-12 >= prev, "ball mass must be monotone for positive measures");
                prev = m;
            }
            let big = mu.ball_mass(center, 100.0).unwrap();
            assert!((big - mu.total_variation()).abs() < 1e-10);
        }
    }

    #[test]
    fn hahn_parts_add_to_total_variation_on_balls() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mu = random_curve(&mut rng, 10, true);
            let d = mu.hahn_decompose();
            let center = PlanePoint::new(rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..1.0));
            let r = rng.gen_range(0.2..3.0);
            let p = d.positive.ball_mass(center, r).unwrap();
            let n = d.negative.ball_mass(center, r).unwrap();
            let tv = mu.abs_measure().ball_mass(center, r).unwrap();
            let signed = mu.ball_mass(center, r).unwrap();
            assert!((p + n - tv).abs() < 1e-12);
            assert!((p - n - signed).abs() < 1e-12);
            assert!(p.max(n) <= tv + 1e-12);
        }
    }

    #[test]
    fn refine_preserves_ball_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let mu = random_curve(&mut rng, 8, true);
            let refined = mu.refine(3).unwrap();
            for _ in 0..10 {
                let center = PlanePoint::new(rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..1.0));
                let r = rng.gen_range(0.1..3.0);
                let a = mu.ball_mass(center, r).unwrap();
                let b = refined.ball_mass(center, r).unwrap();
                assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn cumulative_monotone_for_constant_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mu = random_curve(&mut rng, 15, false);
        for w in mu.cumulative().windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn with_cumulative_cross_check() {
        let verts = vec![PlanePoint::ORIGIN, PlanePoint::new(1.0, 0.0)];
        let ok = CurveMeasure::with_cumulative(verts.clone(), vec![1.0], vec![0.0, 1.0]);
        assert!(ok.is_ok());
        let bad = CurveMeasure::with_cumulative(verts, vec![1.0], vec![0.0, 1.1]);
        assert!(matches!(bad, Err(MeasureError::CumulativeMismatch { .. })));
    }

    #[test]
    fn polyline_validation() {
        assert!(CurveMeasure::new(vec![PlanePoint::ORIGIN], vec![]).is_err());
        assert!(CurveMeasure::new(
            vec![PlanePoint::ORIGIN, PlanePoint::ORIGIN],
            vec![1.0]
        )
        .is_err());
        assert!(AtomicMeasure::new(vec![(PlanePoint::ORIGIN, 0.0)]).is_err());
    }
}
