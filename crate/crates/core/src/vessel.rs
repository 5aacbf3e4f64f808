//! Vessel interior as per-row horizontal extents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::EdgeMap;

/// Default fraction of the widest row below which a row is too narrow to scan.
pub const DEFAULT_NARROW_FRACTION: f64 = 0.2;

/// Inclusive column range of the vessel interior on one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowExtent {
    pub x_left: usize,
    pub x_right: usize,
}

impl RowExtent {
    pub fn width(&self) -> usize {
        self.x_right - self.x_left + 1
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.x_left as i64 && x <= self.x_right as i64
    }
}

/// The vessel interior: a contiguous run of rows, each with one extent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VesselRegion {
    image_width: usize,
    image_height: usize,
    row_top: usize,
    extents: Vec<RowExtent>,
    max_width: usize,
}

impl VesselRegion {
    /// Builds a region from the extents of rows `row_top, row_top + 1, ...`.
    pub fn from_extents(
        image_width: usize,
        image_height: usize,
        row_top: usize,
        extents: Vec<RowExtent>,
    ) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::NoVessel);
        }
        if row_top + extents.len() > image_height {
            return Err(Error::Vessel(format!(
                "rows {}..={} exceed image height {}",
                row_top,
                row_top + extents.len() - 1,
                image_height
            )));
        }
        for (i, e) in extents.iter().enumerate() {
            if e.x_left > e.x_right || e.x_right >= image_width {
                return Err(Error::Vessel(format!(
                    "row {}: invalid extent ({}, {}) for image width {}",
                    row_top + i,
                    e.x_left,
                    e.x_right,
                    image_width
                )));
            }
        }
        let max_width = extents.iter().map(RowExtent::width).max().unwrap_or(0);
        Ok(Self {
            image_width,
            image_height,
            row_top,
            extents,
            max_width,
        })
    }

    /// Per-row outermost interior columns of a binary mask.
    ///
    /// Rows between the first and last interior row must all contain
    /// interior pixels.
    pub fn from_mask(mask: &EdgeMap) -> Result<Self> {
        let mut rows: Vec<(usize, RowExtent)> = Vec::new();
        for y in 0..mask.height() {
            let mut cols = (0..mask.width()).filter(|&x| mask.get(x, y));
            if let Some(first) = cols.next() {
                let last = cols.last().unwrap_or(first);
                rows.push((
                    y,
                    RowExtent {
                        x_left: first,
                        x_right: last,
                    },
                ));
            }
        }
        let Some(&(row_top, _)) = rows.first() else {
            return Err(Error::NoVessel);
        };
        for (i, &(y, _)) in rows.iter().enumerate() {
            if y != row_top + i {
                return Err(Error::Vessel(format!("mask has no interior pixels on row {}", row_top + i)));
            }
        }
        Self::from_extents(
            mask.width(),
            mask.height(),
            row_top,
            rows.into_iter().map(|(_, e)| e).collect(),
        )
    }

    /// Parses a `row x_left x_right` table, one row per line. Blank lines and
    /// lines starting with `#` are ignored. Rows must be consecutive.
    pub fn parse_extent_table(text: &str, image_width: usize, image_height: usize) -> Result<Self> {
        let mut row_top = None;
        let mut extents = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<usize> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Vessel(format!("line {}: {e}", lineno + 1)))?;
            let [row, x_left, x_right] = fields[..] else {
                return Err(Error::Vessel(format!(
                    "line {}: expected `row x_left x_right`",
                    lineno + 1
                )));
            };
            let top = *row_top.get_or_insert(row);
            if row != top + extents.len() {
                return Err(Error::Vessel(format!(
                    "line {}: row {} is not consecutive (expected {})",
                    lineno + 1,
                    row,
                    top + extents.len()
                )));
            }
            extents.push(RowExtent { x_left, x_right });
        }
        Self::from_extents(image_width, image_height, row_top.unwrap_or(0), extents)
    }

    pub fn image_width(&self) -> usize {
        self.image_width
    }

    pub fn image_height(&self) -> usize {
        self.image_height
    }

    pub fn row_top(&self) -> usize {
        self.row_top
    }

    pub fn row_bottom(&self) -> usize {
        self.row_top + self.extents.len() - 1
    }

    /// Number of interior rows.
    pub fn height(&self) -> usize {
        self.extents.len()
    }

    pub fn max_width(&self) -> usize {
        self.max_width
    }

    pub fn extent(&self, row: usize) -> Option<RowExtent> {
        row.checked_sub(self.row_top).and_then(|i| self.extents.get(i)).copied()
    }

    pub fn extents(&self) -> impl Iterator<Item = (usize, RowExtent)> + '_ {
        self.extents.iter().enumerate().map(|(i, &e)| (self.row_top + i, e))
    }

    /// `(row_top, row_bottom)`: the ceiling and floor of the interior.
    pub fn floor_ceiling(&self) -> (usize, usize) {
        (self.row_top, self.row_bottom())
    }

    /// Rows at least `narrow_fraction` of the widest row wide, top to bottom.
    pub fn scannable_rows(&self, narrow_fraction: f64) -> Result<Vec<usize>> {
        if !(0.0..1.0).contains(&narrow_fraction) {
            return Err(Error::Param(format!(
                "narrow_fraction must lie in [0, 1), got {narrow_fraction}"
            )));
        }
        let min = narrow_fraction * self.max_width as f64;
        Ok(self
            .extents()
            .filter(|(_, e)| e.width() as f64 >= min)
            .map(|(row, _)| row)
            .collect())
    }

    /// True if pixel `(x, y)` is inside the vessel interior.
    pub fn contains(&self, x: i64, y: i64) -> bool {
        y >= 0 && self.extent(y as usize).is_some_and(|e| e.contains(x))
    }

    /// Like [`contains`](Self::contains), but rows above the ceiling or below
    /// the floor use the extent of the nearest interior row.
    pub fn contains_clamped(&self, x: i64, y: i64) -> bool {
        let row = y.clamp(self.row_top as i64, self.row_bottom() as i64) as usize;
        self.extents[row - self.row_top].contains(x)
    }

    /// The interior as a binary mask of the image size.
    pub fn rasterize(&self) -> EdgeMap {
        EdgeMap::from_fn(self.image_width, self.image_height, |x, y| {
            self.contains(x as i64, y as i64)
        })
    }

    /// Interior pixels on the region's border: ceiling and floor rows plus
    /// the two end columns of every row.
    pub fn outline(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (row, e) in self.extents() {
            if row == self.row_top || row == self.row_bottom() {
                out.extend((e.x_left..=e.x_right).map(|x| (x, row)));
            } else {
                out.push((e.x_left, row));
                if e.x_right != e.x_left {
                    out.push((e.x_right, row));
                }
            }
        }
        out
    }
}
