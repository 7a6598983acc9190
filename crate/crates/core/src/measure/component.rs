use super::geometry::{AtomSet, Carrier, Geometry, GridDensity, Patch, Segment};
use super::MeasureError;

/// One rectifiable probability measure: a catalog carrier together with
/// its piecewise-constant density.
#[derive(Debug, Clone)]
pub struct RectifiableComponent {
    geometry: Geometry,
}

impl RectifiableComponent {
    pub fn new(geometry: Geometry) -> Self {
        Self { geometry }
    }

    pub fn atoms(points: Vec<Vec<f64>>, pmf: Vec<f64>) -> Result<Self, MeasureError> {
        Ok(Self::new(Geometry::Atoms(AtomSet::new(points, pmf)?)))
    }

    pub fn atom(point: Vec<f64>) -> Result<Self, MeasureError> {
        Self::atoms(vec![point], vec![1.0])
    }

    pub fn segment(start: Vec<f64>, end: Vec<f64>) -> Result<Self, MeasureError> {
        Ok(Self::new(Geometry::Segment(Segment::uniform(start, end)?)))
    }

    /// Segment whose density is constant on the parameter intervals
    /// `[breaks[k], breaks[k+1])`, with `masses[k]` on each.
    pub fn segment_with_density(
        start: Vec<f64>,
        end: Vec<f64>,
        breaks: Vec<f64>,
        masses: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        let density = GridDensity::new(vec![breaks], masses)?;
        Ok(Self::new(Geometry::Segment(Segment::new(start, end, density)?)))
    }

    pub fn patch(anchor: Vec<f64>, axes: Vec<usize>, sides: Vec<f64>) -> Result<Self, MeasureError> {
        let density = GridDensity::uniform(axes.len());
        Ok(Self::new(Geometry::Patch(Patch::new(anchor, axes, sides, density)?)))
    }

    pub fn patch_with_density(
        anchor: Vec<f64>,
        axes: Vec<usize>,
        sides: Vec<f64>,
        breaks: Vec<Vec<f64>>,
        masses: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        let density = GridDensity::new(breaks, masses)?;
        Ok(Self::new(Geometry::Patch(Patch::new(anchor, axes, sides, density)?)))
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, MeasureError> {
        let density = GridDensity::uniform(lower.len());
        Ok(Self::new(Geometry::Box(Patch::full(lower, upper, density)?)))
    }

    pub fn boxed_with_density(
        lower: Vec<f64>,
        upper: Vec<f64>,
        breaks: Vec<Vec<f64>>,
        masses: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        let density = GridDensity::new(breaks, masses)?;
        Ok(Self::new(Geometry::Box(Patch::full(lower, upper, density)?)))
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn carrier(&self) -> &dyn Carrier {
        self.geometry.carrier()
    }

    pub fn dimension(&self) -> usize {
        self.carrier().dimension()
    }

    pub fn ambient_dim(&self) -> usize {
        self.carrier().ambient_dim()
    }

    pub fn kind(&self) -> &'static str {
        self.carrier().kind()
    }
}

/// Closed-form generalized entropy `H_{μ_i}(ρ_i) = -∫ f ln f dH^m`.
pub fn component_entropy(component: &RectifiableComponent) -> Result<f64, MeasureError> {
    let h = component.carrier().entropy();
    if h.is_finite() {
        Ok(h)
    } else {
        Err(MeasureError::UnsupportedGeometry(format!(
            "{} carrier has no finite closed-form entropy",
            component.kind()
        )))
    }
}
