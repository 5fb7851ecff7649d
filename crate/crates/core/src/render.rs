//! Binary portable pixmap (P6) images of classified slices.

use crate::dynamics::OrbitTag;
use crate::error::{Error, Result};

/// One classified pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pixel {
    pub tag: OrbitTag,
    /// Iteration at which the class was decided.
    pub decided_at: Option<usize>,
}

/// A row-major grid of classified pixels, top-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassGrid {
    width: usize,
    height: usize,
    pixels: Vec<Pixel>,
}

impl ClassGrid {
    /// # Panics
    /// If `pixels.len() != width * height`.
    pub fn new(width: usize, height: usize, pixels: Vec<Pixel>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel count does not match dimensions");
        ClassGrid { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn get(&self, i: usize, j: usize) -> Pixel {
        self.pixels[j * self.width + i]
    }

    pub fn count(&self, tag: OrbitTag) -> usize {
        self.pixels.iter().filter(|p| p.tag == tag).count()
    }
}

/// Colour table and escape-time shading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSpec {
    /// Base colour per class, indexed like [`OrbitTag::ALL`].
    pub palette: [[u8; 3]; 5],
    /// Decision times at or beyond this are drawn darkest.
    pub shade_cap: usize,
    pub gamma: f64,
    /// Brightness of the slowest decisions, in `(0, 1]`.
    pub floor: f64,
}

impl Default for ImageSpec {
    fn default() -> Self {
        ImageSpec {
            palette: [[40, 90, 230], [250, 210, 30], [220, 40, 200], [40, 190, 80], [128, 128, 128]],
            shade_cap: 60,
            gamma: 0.5,
            floor: 0.35,
        }
    }
}

impl ImageSpec {
    fn base(&self, tag: OrbitTag) -> [u8; 3] {
        let idx = OrbitTag::ALL.iter().position(|&t| t == tag).expect("every tag is listed");
        self.palette[idx]
    }

    /// Colour of one pixel: fast decisions bright, slow ones dark.
    pub fn colour(&self, p: Pixel) -> [u8; 3] {
        let base = self.base(p.tag);
        let Some(n) = p.decided_at else { return base };
        let x = n.min(self.shade_cap) as f64 / self.shade_cap.max(1) as f64;
        let shade = self.floor + (1.0 - self.floor) * (1.0 - x).powf(self.gamma);
        base.map(|c| (c as f64 * shade).round() as u8)
    }
}

/// Encode `grid` as a binary P6 image: `"P6 {w} {h} 255\n"` then RGB rows.
pub fn render_grid(grid: &ClassGrid, spec: &ImageSpec) -> Result<Vec<u8>> {
    if grid.width == 0 || grid.height == 0 {
        return Err(Error::EmptyImage);
    }
    let header = format!("P6 {} {} 255\n", grid.width, grid.height);
    let mut out = Vec::with_capacity(header.len() + 3 * grid.pixels.len());
    out.extend_from_slice(header.as_bytes());
    for p in &grid.pixels {
        out.extend_from_slice(&spec.colour(*p));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn px(tag: OrbitTag, n: Option<usize>) -> Pixel {
        Pixel { tag, decided_at: n }
    }

    #[test]
    fn single_pixel_image() {
        let spec = ImageSpec::default();
        let grid = ClassGrid::new(1, 1, vec![px(OrbitTag::ToZero, Some(0))]);
        let bytes = render_grid(&grid, &spec).unwrap();
        assert_eq!(&bytes[..11], b"P6 1 1 255\n");
        assert_eq!(&bytes[11..], &spec.palette[0]);
    }

    #[test]
    fn empty_grid() {
        let grid = ClassGrid::new(0, 3, vec![]);
        assert_eq!(render_grid(&grid, &ImageSpec::default()), Err(Error::EmptyImage));
    }

    #[test]
    fn row_major_layout() {
        let grid = ClassGrid::new(2, 1, vec![px(OrbitTag::Escaping, None), px(OrbitTag::Undecided, None)]);
        let bytes = render_grid(&grid, &ImageSpec::default()).unwrap();
        assert_eq!(&bytes[11..14], &[250, 210, 30]);
        assert_eq!(&bytes[14..], &[128, 128, 128]);
        assert_eq!(grid.get(1, 0).tag, OrbitTag::Undecided);
    }

    #[test]
    fn colours_identify_classes() {
        let spec = ImageSpec::default();
        let bases: HashSet<_> = spec.palette.iter().collect();
        assert_eq!(bases.len(), 5);
        // Shading never makes two classes share a colour.
        let mut seen = std::collections::HashMap::new();
        for tag in OrbitTag::ALL {
            for n in (0..=spec.shade_cap + 1).map(Some).chain([None]) {
                let c = spec.colour(px(tag, n));
                assert_eq!(*seen.entry(c).or_insert(tag), tag, "{c:?}");
            }
        }
    }

    #[test]
    fn identical_grids_give_identical_bytes() {
        let pixels: Vec<_> = (0..12).map(|k| px(OrbitTag::ALL[k % 5], Some(k * 7))).collect();
        let a = render_grid(&ClassGrid::new(4, 3, pixels.clone()), &ImageSpec::default()).unwrap();
        let b = render_grid(&ClassGrid::new(4, 3, pixels), &ImageSpec::default()).unwrap();
        assert_eq!(a, b);
    }
}
