//! Full-scale sanity run: 3 users x 4 antennas, 9 BS antennas,
//! 32 subcarriers, 25 surface elements. Checks direction and magnitude of
//! the surface gain at 10 dB rather than exact values; at this scale the
//! gain sits around 17 bit/s/Hz for rich surface-user links.

use irsim_core::experiment::{g_irs, monte_carlo, ExperimentSpec, Method, RunOptions};
use irsim_core::SystemConfig;

#[test]
fn full_scale_surface_gain_magnitude() {
    let base = SystemConfig::full_scale();
    let spec = ExperimentSpec {
        snr_db_list: vec![10.0],
        n_irs_list: vec![base.num_irs_elements],
        n_path_i_list: vec![base.paths_irs_user],
        bits_list: vec![0],
        methods: vec![Method::ProposedPg, Method::NoIrsMrt],
        realizations: 40,
        base,
    };
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: dir.path().to_path_buf(),
        deterministic: true,
        threads: None,
    };
    let rows = monte_carlo(&spec, &opts).unwrap().rows;
    let cell = spec.cells()[0];
    let gain = g_irs(&rows, &cell).unwrap();
    assert!(
        (5.0..40.0).contains(&gain),
        "full-scale surface gain {gain:.2} bit/s/Hz is out of the plausible band"
    );
    println!("full-scale surface gain at 10 dB: {gain:.2} bit/s/Hz over 40 paired realizations");
}
