use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ImagingGeometry;
use crate::scene::{Scatterer, Scene};

pub const GLYPH_WIDTH: usize = 3;
pub const GLYPH_HEIGHT: usize = 5;

/// Smallest allowed point spacing, in PSF widths.
const MIN_SPACING_SIGMAS: f64 = 3.0;
/// Fraction of the imaging region the text may occupy.
const FILL: f64 = 0.9;

/// 3x5 bitmaps, top row first, most significant bit on the left.
fn glyph(c: char) -> Option<[u8; GLYPH_HEIGHT]> {
    Some(match c {
        'A' => [0b010, 0b101, 0b111, 0b101, 0b101],
        'B' => [0b110, 0b101, 0b110, 0b101, 0b110],
        'C' => [0b011, 0b100, 0b100, 0b100, 0b011],
        'D' => [0b110, 0b101, 0b101, 0b101, 0b110],
        'E' => [0b111, 0b100, 0b110, 0b100, 0b111],
        'F' => [0b111, 0b100, 0b110, 0b100, 0b100],
        'G' => [0b011, 0b100, 0b101, 0b101, 0b011],
        'H' => [0b101, 0b101, 0b111, 0b101, 0b101],
        'I' => [0b111, 0b010, 0b010, 0b010, 0b111],
        'J' => [0b001, 0b001, 0b001, 0b101, 0b010],
        'K' => [0b101, 0b101, 0b110, 0b101, 0b101],
        'L' => [0b100, 0b100, 0b100, 0b100, 0b111],
        'M' => [0b101, 0b111, 0b111, 0b101, 0b101],
        'N' => [0b110, 0b101, 0b101, 0b101, 0b101],
        'O' => [0b010, 0b101, 0b101, 0b101, 0b010],
        'P' => [0b110, 0b101, 0b110, 0b100, 0b100],
        'Q' => [0b010, 0b101, 0b101, 0b110, 0b011],
        'R' => [0b110, 0b101, 0b110, 0b101, 0b101],
        'S' => [0b011, 0b100, 0b010, 0b001, 0b110],
        'T' => [0b111, 0b010, 0b010, 0b010, 0b010],
        'U' => [0b101, 0b101, 0b101, 0b101, 0b111],
        'V' => [0b101, 0b101, 0b101, 0b101, 0b010],
        'W' => [0b101, 0b101, 0b111, 0b111, 0b101],
        'X' => [0b101, 0b101, 0b010, 0b101, 0b101],
        'Y' => [0b101, 0b101, 0b010, 0b010, 0b010],
        'Z' => [0b111, 0b001, 0b010, 0b100, 0b111],
        ' ' => [0; GLYPH_HEIGHT],
        _ => return None,
    })
}

/// Unit-amplitude point scatterers spelling `name` (A-Z and spaces, case
/// insensitive). The text is wrapped onto as many lines as gives the widest
/// point spacing, centered, then shifted by irrational fractions of a pixel
/// so no point sits on a pixel center.
pub fn letter_scene(name: &str, geom: &ImagingGeometry) -> Result<Scene> {
    let chars: Vec<char> = name.chars().map(|c| c.to_ascii_uppercase()).collect();
    let glyphs = chars.iter().map(|&c| glyph(c).ok_or(Error::UnknownGlyph(c))).collect::<Result<Vec<_>>>()?;
    if glyphs.is_empty() {
        return Err(Error::InvalidField { field: "name", reason: "empty".into() });
    }
    let n = glyphs.len();
    // (pitch, chars per line, lines)
    let (pitch, per_line, lines) = (1..=n)
        .map(|lines| {
            let per_line = n.div_ceil(lines);
            let cols = (GLYPH_WIDTH + 1) * per_line - 1;
            let rows = (GLYPH_HEIGHT + 1) * lines - 1;
            let pitch = FILL * (geom.region_x / cols as f64).min(geom.region_y / rows as f64);
            (pitch, per_line, lines)
        })
        .fold((0.0, n, 1), |best, cand| if cand.0 > best.0 { cand } else { best });
    let min_pitch = MIN_SPACING_SIGMAS * geom.sigma_x.max(geom.sigma_y);
    if pitch < min_pitch {
        return Err(Error::InvalidField {
            field: "name",
            reason: format!("{n} glyphs do not fit the region at {MIN_SPACING_SIGMAS} PSF widths spacing"),
        });
    }
    let cols = (GLYPH_WIDTH + 1) * per_line - 1;
    let rows = (GLYPH_HEIGHT + 1) * lines - 1;
    let off_x = (2f64.sqrt() - 1.0) / 2.0 * geom.pitch_x();
    let off_y = (3f64.sqrt() - 1.0) / 2.0 * geom.pitch_y();
    let mut scatterers = Vec::new();
    for (k, g) in glyphs.iter().enumerate() {
        let (line, slot) = (k / per_line, k % per_line);
        for (gy, bits) in g.iter().enumerate() {
            for gx in 0..GLYPH_WIDTH {
                if bits >> (GLYPH_WIDTH - 1 - gx) & 1 == 0 {
                    continue;
                }
                let col = slot * (GLYPH_WIDTH + 1) + gx;
                let row = line * (GLYPH_HEIGHT + 1) + gy;
                let x = (col as f64 - (cols - 1) as f64 / 2.0) * pitch + off_x;
                let y = ((rows - 1) as f64 / 2.0 - row as f64) * pitch + off_y;
                scatterers.push(Scatterer { x, y, amp: Complex64::new(1.0, 0.0) });
            }
        }
    }
    Ok(Scene::new(scatterers, geom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_letters_defined() {
        for c in 'A'..='Z' {
            let g = glyph(c).unwrap();
            assert!(g.iter().any(|&r| r != 0), "{c}");
        }
    }

    #[test]
    fn unknown_glyph() {
        let g = ImagingGeometry::desk();
        assert!(matches!(letter_scene("A1", &g), Err(Error::UnknownGlyph('1'))));
    }

    #[test]
    fn unit_amplitudes_and_counts() {
        let g = ImagingGeometry::desk();
        let s = letter_scene("ti", &g).unwrap();
        assert_eq!(s.scatterers.len(), 7 + 9);
        assert!(s.scatterers.iter().all(|p| p.amp == Complex64::new(1.0, 0.0)));
        assert!(s.scatterers.iter().all(|p| p.x.abs() < g.region_x / 2.0 && p.y.abs() < g.region_y / 2.0));
    }

    #[test]
    fn too_long_rejected() {
        let g = ImagingGeometry::desk();
        assert!(letter_scene(&"W".repeat(40), &g).is_err());
    }
}
