//! Every acceptance criterion at its stated tolerance, one line each.

use kahlercap::acceptance::run_suite;

#[test]
fn acceptance_suite() {
    let outcomes = run_suite(&[]);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!("{}/{} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    assert_eq!(outcomes.len(), 14);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
