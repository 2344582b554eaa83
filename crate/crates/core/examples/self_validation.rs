//! Run the invariant suite, then show that each injected sign error is
//! caught.

use thermocd::engine::{validate, Injection, ValidateOptions};

fn main() {
    let clean = validate(&ValidateOptions::default());
    print!("{}", clean.to_text());
    for inj in Injection::ALL {
        let r = validate(&ValidateOptions { injection: Some(inj), ..Default::default() });
        let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        println!("{}: caught by {failed:?}", inj.name());
    }
}
