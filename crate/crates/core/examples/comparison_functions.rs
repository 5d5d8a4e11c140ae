//! Sub- and supersolutions of the origin equation: scan for the cut-off K.
use rwsbi::barrier::{scan_sub_supersolution, Side};
use rwsbi::HeatParams;

fn main() {
    let params = HeatParams::standard();
    let threshold = params.log_constant();
    println!("threshold log(sqrt(2 pi) gamma / sigma) = {threshold:.6}");
    for (side, c) in [(Side::Sub, threshold - 1.0), (Side::Super, threshold + 1.0)] {
        let report = scan_sub_supersolution(&params, c, side, 1e5, 30).unwrap();
        println!(
            "{side:?} C = {c:.3}: K = {}, plateau = {:.3}, holds = {}, min margin = {:.3e}",
            report.comparison.k,
            report.comparison.plateau,
            report.all_hold(),
            report.min_margin()
        );
    }
}
