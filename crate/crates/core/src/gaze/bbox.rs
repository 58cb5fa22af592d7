use serde::{Deserialize, Serialize};

/// Off-box gaze within this fraction of the box size still normalizes.
pub const DEFAULT_MARGIN_FRAC: f64 = 0.10;

/// Binocular gaze point in ego-image pixels. Off-image values are legal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t: f64,
    pub x_px: f64,
    pub y_px: f64,
}

impl GazeSample {
    pub fn new(t: f64, x_px: f64, y_px: f64) -> Self {
        Self { t, x_px, y_px }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox2D {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox2D {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        debug_assert!(x_min <= x_max && y_min <= y_max);
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        ]
    }

    /// Closed containment.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

/// Running mean of the boxes seen for one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedBox {
    pub label: String,
    pub mean_box: BBox2D,
    pub n_frames: u64,
}

impl AveragedBox {
    pub fn new(label: impl Into<String>, first: BBox2D) -> Self {
        Self {
            label: label.into(),
            mean_box: first,
            n_frames: 1,
        }
    }

    /// Folds in another frame's box for the same object.
    pub fn update(&mut self, new_box: BBox2D) {
        self.n_frames += 1;
        let w = 1.0 / self.n_frames as f64;
        let m = &mut self.mean_box;
        m.x_min += (new_box.x_min - m.x_min) * w;
        m.y_min += (new_box.y_min - m.y_min) * w;
        m.x_max += (new_box.x_max - m.x_max) * w;
        m.y_max += (new_box.y_max - m.y_max) * w;
    }
}

/// Functional form of [`AveragedBox::update`]; rejects a box that belongs
/// to a different object.
pub fn update_averaged_box(
    avg: &AveragedBox,
    label: &str,
    new_box: BBox2D,
) -> Result<AveragedBox, String> {
    if avg.label != label {
        return Err(format!(
            "cannot average a `{label}` box into `{}`",
            avg.label
        ));
    }
    let mut out = avg.clone();
    out.update(new_box);
    Ok(out)
}

/// Gaze position inside an averaged box, in `[0, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedGaze {
    pub u: f64,
    pub v: f64,
}

impl NormalizedGaze {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.u, self.v]
    }
}

/// The sample fell outside the (dilated) box, or the box is degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutsideBox;

pub fn normalize_gaze(
    sample: &GazeSample,
    avg: &AveragedBox,
    margin_frac: f64,
) -> Result<NormalizedGaze, OutsideBox> {
    let b = &avg.mean_box;
    let (w, h) = (b.width(), b.height());
    if !(w > 0.0 && h > 0.0) {
        return Err(OutsideBox);
    }
    let (mx, my) = (margin_frac * w, margin_frac * h);
    let inside = sample.x_px >= b.x_min - mx
        && sample.x_px <= b.x_max + mx
        && sample.y_px >= b.y_min - my
        && sample.y_px <= b.y_max + my;
    if !inside {
        return Err(OutsideBox);
    }
    Ok(NormalizedGaze {
        u: ((sample.x_px - b.x_min) / w).clamp(0.0, 1.0),
        v: ((sample.y_px - b.y_min) / h).clamp(0.0, 1.0),
    })
}

/// Pixel position of a normalized point inside a box.
pub fn denormalize(g: NormalizedGaze, b: &BBox2D) -> [f64; 2] {
    [b.x_min + g.u * b.width(), b.y_min + g.v * b.height()]
}

/// Label of the smallest-area box containing the sample, ties broken by
/// label so the answer does not depend on list order.
pub fn hit_test<'a>(sample: &GazeSample, boxes: &'a [(String, BBox2D)]) -> Option<&'a str> {
    boxes
        .iter()
        .filter(|(_, b)| b.contains(sample.x_px, sample.y_px))
        .min_by(|(la, a), (lb, b)| a.area().total_cmp(&b.area()).then_with(|| la.cmp(lb)))
        .map(|(l, _)| l.as_str())
}
