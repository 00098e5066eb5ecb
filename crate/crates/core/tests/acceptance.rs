use irrframe::config::RunConfig;
use irrframe::verify::Verifier;

#[test]
fn acceptance_criteria() {
    let cfg = RunConfig::reference();
    let mut v = Verifier::new(&cfg).expect("reference configuration builds");
    println!("setup {:.2}s", v.setup_s);
    let mut failed = Vec::new();
    for id in 1..=9 {
        if !v.applies(id) {
            continue;
        }
        let r = v.run(id);
        println!("{}", r.line());
        println!("    {}", r.measured);
        if let Some(e) = &r.error {
            println!("    error: {e}");
        }
        if !r.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
