//! Static metrics of a Java file, its resolved dependencies, and the DMM
//! risk delta of an edit.
//!
//! cargo run --example code_metrics

use citcp::analysis::{analyze_file, parse_java, risk_delta, RepoIndex};
use citcp::catalog::COMPLEXITY_METRICS;

const BEFORE: &str = r#"package shop.cart;

import shop.pricing.Discounts;

/** Shopping cart. */
public class Cart {
    private int total;

    public int add(int price, int qty) {
        total += price * qty;
        return total;
    }
}
"#;

const AFTER: &str = r#"package shop.cart;

import shop.pricing.Discounts;

/** Shopping cart. */
public class Cart {
    private int total;

    public int add(int price, int qty, int coupon, boolean member) {
        int line = price * qty;
        if (coupon > 0 && line > coupon) {
            line -= coupon;
        }
        for (int i = 0; i < qty; i++) {
            if (member) {
                line -= 1;
            } else if (i > 10) {
                line += 1;
            }
        }
        total += Discounts.apply(line);
        return total;
    }
}
"#;

fn main() {
    let index = RepoIndex::new(["src/shop/cart/Cart.java", "src/shop/pricing/Discounts.java"]);
    let (metrics, entity) = analyze_file(AFTER, "src/shop/cart/Cart.java", &index);
    for (name, value) in COMPLEXITY_METRICS.iter().zip(metrics.values()) {
        if value != 0.0 {
            println!("{name:<28} {value}");
        }
    }
    println!("imports resolved to {:?}", entity.import_targets);

    let before = parse_java(BEFORE).units;
    let after = parse_java(AFTER).units;
    for u in &after {
        println!("unit {} lines {}-{} nloc {} ccn {} params {}", u.name, u.start_line, u.end_line, u.nloc, u.cyclomatic, u.parameters);
    }
    let r = risk_delta(&before, &after);
    println!("risk delta size {:?} complexity {:?} interfacing {:?}", r.size, r.complexity, r.interfacing);
}
