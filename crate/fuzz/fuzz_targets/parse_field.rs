#![no_main]

use affmin::funcspec::Expr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for dim in 1..=3 {
        if let Ok(expr) = Expr::parse(text, dim) {
            let _ = expr.eval(&vec![0.5; dim]);
            let _ = expr.eval(&vec![-1.0; dim]);
            let printed = expr.to_string();
            let again = Expr::parse(&printed, dim).expect("printed expression parses");
            assert_eq!(again.to_string(), printed);
        }
    }
});
