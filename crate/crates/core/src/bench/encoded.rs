//! Hand-built coupling reports that encode qualitative structure over the
//! eight platform variables. These are constructed inputs, not measured data.

use crate::dca::CouplingReport;

use super::fowt::fowt_space;

/// Index order: D_main, D_pnt_up, D_pnt_low, D_outer, R_cs, z_keel, z_frbrd, ps_pct.
const D_MAIN: usize = 0;
const D_PNT_UP: usize = 1;
const D_PNT_LOW: usize = 2;
const D_OUTER: usize = 3;
const R_CS: usize = 4;
const Z_KEEL: usize = 5;
const Z_FRBRD: usize = 6;
const PS: usize = 7;

/// Coupling structure for sequencing:
/// - `ps_pct` strongly moves every plant variable, with weak reverse effect;
/// - `{z_keel, D_outer, R_cs, D_pnt_low}` are mutually strong and moderately
///   drive the remaining plant variables;
/// - `D_main -> z_frbrd -> D_pnt_up` is a chain of moderate one-way effects.
pub fn encoded_sequence_report() -> CouplingReport {
    let n = 8;
    let mut jx = vec![vec![0.0; n]; n];
    // jx[a][b]: effect of perturbing b on the optimum of a
    for a in 0..PS {
        jx[a][PS] = 0.8;
        jx[PS][a] = 0.05;
    }
    let core = [D_PNT_LOW, D_OUTER, R_CS, Z_KEEL];
    for &a in &core {
        for &b in &core {
            if a != b {
                jx[a][b] = 0.7;
            }
        }
        for &weak in &[D_MAIN, Z_FRBRD, D_PNT_UP] {
            jx[weak][a] = 0.3;
            jx[a][weak] = 0.1;
        }
    }
    jx[Z_FRBRD][D_MAIN] = 0.3;
    jx[D_PNT_UP][D_MAIN] = 0.3;
    jx[D_PNT_UP][Z_FRBRD] = 0.3;
    jx[D_MAIN][Z_FRBRD] = 0.1;
    jx[D_MAIN][D_PNT_UP] = 0.1;
    jx[Z_FRBRD][D_PNT_UP] = 0.1;
    let jpsi = vec![vec![0.1; n]; n];
    CouplingReport::from_matrices(fowt_space().names(), jx, jpsi).expect("static matrices are valid")
}

/// Sensitivity and coupling structure for subset selection: objective
/// sensitivity ranks D_pnt_low, z_keel, D_outer, R_cs, z_frbrd, D_pnt_up,
/// D_main, ps_pct; the strongest coupling partner of D_pnt_low is D_main.
pub fn encoded_subset_report() -> CouplingReport {
    let n = 8;
    let ranking = [D_PNT_LOW, Z_KEEL, D_OUTER, R_CS, Z_FRBRD, D_PNT_UP, D_MAIN, PS];
    let mut jpsi = vec![vec![0.0; n]; n];
    for (rank, &b) in ranking.iter().enumerate() {
        let top = 1.0 - 0.1 * rank as f64;
        for a in 0..n {
            if a != b {
                // the column maximum sits on one row; the others are smaller
                jpsi[a][b] = if a == (b + 1) % n { top } else { 0.5 * top };
            }
        }
    }
    let mut jx = vec![vec![0.1; n]; n];
    jx[D_PNT_LOW][D_MAIN] = 0.9;
    jx[D_MAIN][D_PNT_LOW] = 0.85;
    jx[D_PNT_LOW][Z_KEEL] = 0.4;
    jx[Z_KEEL][D_PNT_LOW] = 0.35;
    jx[D_PNT_LOW][D_OUTER] = 0.5;
    jx[D_OUTER][D_PNT_LOW] = 0.45;
    CouplingReport::from_matrices(fowt_space().names(), jx, jpsi).expect("static matrices are valid")
}
