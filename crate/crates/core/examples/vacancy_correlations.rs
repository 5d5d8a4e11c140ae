//! Joint vacancy of Poisson events: exact, series and Monte Carlo.
use rwsbi::correlations::{
    correlation_exact, correlation_montecarlo, correlation_series, VacancySpec,
};
use rwsbi::RngStream;

fn main() {
    let spec = VacancySpec::parse(
        "I:1 = 1\nI:2 = 1\nI:3 = 0.8\nI:1,2 = 0.5\nI:1,3 = 0.3\nI:2,3 = 0.2\nI:1,2,3 = 0.1\n",
    )
    .unwrap();
    let exact = correlation_exact(&spec).unwrap();
    println!("exact: {exact:.12}");
    for m in [2, 4, 8, 16] {
        let (v, bound) = correlation_series(&spec, m).unwrap();
        println!(
            "series M = {m:>2}: {v:.12}  |error| {:.1e} <= {bound:.1e}",
            (v - exact).abs()
        );
    }
    let (est, se) = correlation_montecarlo(&spec, 1_000_000, RngStream::new(4, 0)).unwrap();
    println!("monte carlo: {est:.5} +- {se:.5}");
}
