use num_bigint::BigInt;
use serde_json::{json, Value};

use quadcert::cfrac::{convergents, expand_sqrt};
use quadcert::escalation::{diagonal, escalate, lower_bound_search, named_queue, represents};
use quadcert::family::{certify_non_universality, instantiate, scan_t, RangeMode, SearchFilters};
use quadcert::quadfield::{check_prop24, make_field, small_norm_generators, Cond4Mode};
use quadcert::sieve::{count_simultaneous, count_simultaneous_mobius, SieveSpec};

fn b(n: i64) -> BigInt {
    BigInt::from(n)
}

#[test]
fn certificate_json_shape() {
    let inst = instantiate(&b(2), 7, &b(1)).unwrap();
    let c = certify_non_universality(&inst, RangeMode::Direct).unwrap();
    let v: Value = serde_json::to_value(&c).unwrap();
    assert_eq!(v["D"], "42195");
    assert_eq!(v["M"], 3);
    assert_eq!(v["valid"], true);
    assert_eq!(v["mode"], "brute");
    assert_eq!(v["elements"], json!([["1", "0"], ["411", "2"], ["2465", "12"]]));
    let kinds: Vec<&str> = v["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["kind"].as_str().unwrap())
        .collect();
    assert!(kinds.contains(&"dominated_squares"));
    assert!(kinds.contains(&"distinct_square_class"));
}

#[test]
fn instance_json_uses_string_keys() {
    let inst = instantiate(&b(2), 3, &b(4)).unwrap();
    let v: Value = serde_json::to_value(&inst).unwrap();
    assert_eq!(v["D"], "646");
    assert_eq!(v["N"]["1"], "17");
    assert_eq!(v["k"], "25");
}

#[test]
fn search_then_certify() {
    let (hits, log) = scan_t(&b(2), 7, &b(1), &b(10), &SearchFilters::default()).unwrap();
    assert_eq!(log.len(), 10);
    assert_eq!(hits[0].instance.d, b(42195));
    for h in &hits {
        let c = certify_non_universality(&h.instance, RangeMode::Direct).unwrap();
        let one_mod_4 = &h.instance.d % 4 == b(1);
        if !one_mod_4 {
            assert!(c.valid, "D = {}", h.instance.d);
        }
    }
}

#[test]
fn generators_feed_certificates() {
    let k = make_field(&b(73)).unwrap();
    let g = small_norm_generators(&k, 2).unwrap();
    let brute = check_prop24(&k, &g, Cond4Mode::Brute).unwrap();
    let cond5 = check_prop24(&k, &g, Cond4Mode::Condition5).unwrap();
    assert!(brute.valid && cond5.valid);
    assert_eq!(brute.conclusion_m, cond5.conclusion_m);
}

#[test]
fn escalation_targets_are_truants() {
    let k = make_field(&b(73)).unwrap();
    let q = named_queue("paper73", &k).unwrap();
    let one = diagonal(&k, &[k.one()]).unwrap();
    assert!(represents(&one, &q[1]).is_none());
    let next = escalate(&one, &q[1]).unwrap();
    assert_eq!(next.len(), 1);
    assert!(next[0].is_diagonal());
    let r = lower_bound_search(&k, &q, 4).unwrap();
    assert_eq!(r.bound, 4);
    assert_eq!(serde_json::to_value(&r).unwrap()["tree_summary"], json!([1, 1, 1, 1]));
}

#[test]
fn sieve_counts_agree() {
    let spec = SieveSpec::new((1, 1, 1), vec![(1, 2), (3, 1)]).unwrap();
    let a = count_simultaneous(&spec, 5000, &Default::default()).unwrap();
    assert_eq!(a as i64, count_simultaneous_mobius(&spec, 5000));
}

#[test]
fn convergent_norms_match_expansion() {
    let exp = expand_sqrt(&b(94)).unwrap();
    for c in convergents(&exp, 2 * exp.len()) {
        assert_eq!(c.n, &c.p * &c.p - b(94) * &c.q * &c.q);
    }
}
