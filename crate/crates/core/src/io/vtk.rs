use std::fmt::Write as _;

use super::Provenance;
use crate::grid::{DepositionField, Field3, Grid3};

fn header(g: &Grid3, nz: usize, z_spacing: f64, title: &str, prov: &Provenance) -> String {
    let [dx, dy, _] = g.spacing();
    let mut s = String::from("# vtk DataFile Version 3.0\n");
    // the title line is limited to one line of text
    let _ = writeln!(s, "{title} {} config_sha256={}", prov.tool, prov.config_hash);
    s.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(s, "DIMENSIONS {} {} {}", g.nx(), g.ny(), nz);
    let z0 = if nz == 1 { 0.0 } else { g.center(2, 0) };
    let _ = writeln!(s, "ORIGIN {} {} {}", g.center(0, 0), g.center(1, 0), z0);
    let _ = writeln!(s, "SPACING {dx} {dy} {z_spacing}");
    let _ = writeln!(s, "POINT_DATA {}", g.nx() * g.ny() * nz);
    s
}

/// Legacy structured-points file with cell averages placed at cell centres.
pub fn write_field_vtk(f: &Field3, name: &str, prov: &Provenance) -> String {
    let g = f.grid;
    let mut s = header(&g, g.nz(), g.spacing()[2], "concentration", prov);
    let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in &f.values {
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn write_deposition_vtk(w: &DepositionField, name: &str, prov: &Provenance) -> String {
    let mut s = header(&w.grid, 1, 1.0, "deposition", prov);
    let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in &w.values {
        let _ = writeln!(s, "{v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vtk_layout() {
        let g = Grid3::new([0.0, 0.0, 0.0], [2.0, 4.0, 6.0], [2, 2, 3]).unwrap();
        let f = Field3::zeros(g);
        let t = write_field_vtk(&f, "c", &Provenance::new("h", None));
        assert!(t.contains("DIMENSIONS 2 2 3\n"));
        assert!(t.contains("ORIGIN 0.5 1 1\n"));
        assert!(t.contains("SPACING 1 2 2\n"));
        assert_eq!(t.lines().filter(|l| *l == "0").count(), 12);
        let w = DepositionField::zeros(g);
        assert!(write_deposition_vtk(&w, "w", &Provenance::new("h", None)).contains("POINT_DATA 4\n"));
    }
}
