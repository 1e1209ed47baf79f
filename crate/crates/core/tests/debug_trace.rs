#[test]
fn debug_walker_trace() {
    use permqio_core::problem::{generate_espdp, EspdpGenParams};
    use permqio_core::rng::RandomStream;
    use permqio_core::ssmc::{run_ssmc, SsmcConfig};
    let inst = generate_espdp(6, &mut RandomStream::new(2), &EspdpGenParams::default()).unwrap();
    let config = SsmcConfig { walkers: 24, steps: 200, seed: 11, ..SsmcConfig::default() };
    let r = run_ssmc(&inst, &config).unwrap();
    let wt = r.walker_trace.unwrap();
    for (i, p) in wt.iter().enumerate() {
        if i % 10 == 0 || p.count < 13 {
            println!("step {i:4} s={:.3} count={:3} mean={:.3} offset={:+.4}", p.s, p.count, p.mean_energy, p.offset);
        }
    }
}
