//! CSV and PGM writers. Every file starts with the config hash.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::grid::GridField;
use crate::roots::RootCloud;

/// `re,im,multiplicity,residual`, one row per distinct root.
pub fn cloud_csv(cloud: &RootCloud, config_hash: &str) -> String {
    let mut s = format!("# config_hash={config_hash}\nre,im,multiplicity,residual\n");
    for p in &cloud.points {
        writeln!(s, "{},{},{},{:e}", p.location.re, p.location.im, p.multiplicity, p.residual).unwrap();
    }
    s
}

/// One line per grid row (`im` ascending), `nx` values per line; masked
/// entries are `nan`.
pub fn grid_csv(field: &GridField, config_hash: &str) -> String {
    let g = &field.spec;
    let r = &g.rect;
    let mut s = format!(
        "# config_hash={config_hash}\n# rect={},{},{},{} nx={} ny={}\n",
        r.re_min, r.re_max, r.im_min, r.im_max, g.nx, g.ny
    );
    for j in 0..g.ny {
        let row: Vec<String> = (0..g.nx)
            .map(|i| {
                let idx = j * g.nx + i;
                if field.mask[idx] {
                    format!("{}", field.values[idx])
                } else {
                    "nan".to_string()
                }
            })
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Binary 8-bit PGM, top row = largest `im`. Values map linearly from
/// `[lo, hi]` to `[1, 255]`, clamped; masked entries are 0.
pub fn grid_pgm(field: &GridField, lo: f64, hi: f64, config_hash: &str) -> Vec<u8> {
    let g = &field.spec;
    let mut out = format!("P5\n# config_hash={config_hash}\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    let span = if hi > lo { hi - lo } else { 1.0 };
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            let idx = j * g.nx + i;
            let px = if field.mask[idx] {
                let t = ((field.values[idx] - lo) / span).clamp(0.0, 1.0);
                1 + (t * 254.0).round() as u8
            } else {
                0
            };
            out.push(px);
        }
    }
    out
}

pub fn write(dir: &Path, name: &str, bytes: &[u8]) -> io::Result<()> {
    fs::write(dir.join(name), bytes)
}
