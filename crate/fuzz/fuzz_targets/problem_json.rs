#![no_main]

use circa::cli::{export_dot, parse_problem, DotKind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(problem) = parse_problem(text) else { return };
    if problem.vertex_count() <= 32 {
        let _ = export_dot(&problem, DotKind::Flux);
    }
});
