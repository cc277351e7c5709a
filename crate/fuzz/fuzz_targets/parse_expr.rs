#![no_main]

use libfuzzer_sys::fuzz_target;
use schauder_core::expr::parse_expr;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(ast) = parse_expr(text) else { return };
    let printed = ast.to_string();
    let again = parse_expr(&printed).expect("printed expression parses");
    assert_eq!(again, ast, "{printed}");
    let _ = ast.eval(0.5, &[0.25, -1.0, 2.0]);
});
