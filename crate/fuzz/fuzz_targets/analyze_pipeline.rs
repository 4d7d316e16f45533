#![no_main]

use circa::cli::{analyze, check_report, parse_problem, AnalyzeFlags};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(problem) = parse_problem(text) else { return };
    if problem.vertex_count() > 24 {
        return;
    }
    for include_outer in [false, true] {
        let flags = AnalyzeFlags { include_outer, ..AnalyzeFlags::default() };
        if let Ok(a) = analyze(&problem, &flags) {
            check_report(&a.report(0.0)).expect("a successful analysis must revalidate");
        }
    }
});
