use distilled::dataset::{pinn_schema, SyntheticDataset};
use distilled::linalg::Mat;
use distilled::pinn::*;

fn main() {
    // Probe A: adapted-solve floor with PERFECT synthetic data (exact labels,
    // own alpha = -1.0), test BC alpha = +1.0.
    let (lat, _) = polar_lattice(36, 4);
    let alpha_own = -1.0;
    for (epochs, lr, w) in [(300usize, 0.01f64, 16usize), (600, 0.01, 16), (300, 0.02, 16), (600, 0.02, 16), (1000, 0.01, 16), (600, 0.01, 32)] {
        let mut rows = vec![vec![1.0, 0.0, alpha_own + 1.0]];  // one boundary row
        for &(r, th) in lat.iter().take(35) {
            rows.push(vec![r, th, exact_solution(r, th, alpha_own)]);
        }
        let d = SyntheticDataset::new(pinn_schema(), Mat::from_rows(rows)).unwrap();
        let (tlat, tbth) = polar_lattice(384, 16);
        let alpha_test = 1.0;
        let test_bc = PinnDataset {
            alpha: alpha_test,
            interior: tlat.iter().map(|&(r, th)| [r, th, exact_solution(r, th, alpha_test)]).collect(),
            boundary: tbth.iter().map(|&th| [th, th.cos() + alpha_test]).collect(),
        };
        let cfg = PinnTrainConfig { widths: vec![2, w, w, w, 1], epochs, lr, residual_weight: 1.0, net_seed: 0 };
        let err = ood_test_error(&d, 1, &[test_bc], &cfg).unwrap();
        println!("epochs {epochs} lr {lr} width {w}: adapted L2 with perfect D = {:.4}", err.value);
    }
}
