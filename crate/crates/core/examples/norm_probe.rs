use kraussim::evolution::{enumerate_product_levels, PruningPolicy};
use kraussim::fmo::{fmo_schedule, FmoParams};
use kraussim::{build_fmo_model, dilate, embed_state, kraus_from_lindblad, spectral_norm, CMatrix, CVector, C64};

fn main() {
    let params = FmoParams::default();
    let model = build_fmo_model(&params).unwrap();
    let policy = PruningPolicy { norm_threshold: 0.05, ..Default::default() };
    let mut v = CVector::zeros(5);
    v[1] = C64::new(1.0, 0.0);
    for group in fmo_schedule() {
        let ks_first = kraus_from_lindblad(&model, group.first_dt_fs(), true).unwrap();
        let ks_later = kraus_from_lindblad(&model, group.later_dt_fs(), true).unwrap();
        let mut sets = vec![&ks_first];
        for _ in 0..5 { sets.push(&ks_later); }
        let levels = enumerate_product_levels(&sets, &policy).unwrap();
        for (k, terms) in levels.iter().enumerate() {
            for (idx, t) in terms.iter().enumerate() {
                let sn = spectral_norm(t.representative()).unwrap();
                let dil = dilate(t.representative()).unwrap();
                let u = dil.matrix();
                let unit_defect = (u.adjoint() * u - CMatrix::identity(10, 10)).norm();
                let out = u * embed_state(&v).unwrap();
                let onorm = out.norm();
                if (onorm - 1.0).abs() > 1e-9 || unit_defect > 1e-9 {
                    println!(
                        "group first_dt {} level {} term {} word {:?}: spectral {} unit_defect {:.3e} out_norm {}",
                        group.first_dt_au, k, idx, t.word(), sn, unit_defect, onorm
                    );
                }
            }
        }
    }
    println!("done");
}
