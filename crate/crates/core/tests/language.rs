use cbls_core::domain::{Card, Domain};
use cbls_core::lang::ast::Direction;
use cbls_core::lang::{instantiate, parse_params, parse_spec, LangError};
use cbls_core::value::Plain;

const MODELS: &[(&str, &str, &str)] = &[
    ("sonet", include_str!("../../../models/sonet.spec"), include_str!("../../../models/sonet.param")),
    ("tsp", include_str!("../../../models/tsp.spec"), include_str!("../../../models/tsp.param")),
    ("knapsack", include_str!("../../../models/knapsack.spec"), include_str!("../../../models/knapsack.param")),
    ("binpacking", include_str!("../../../models/binpacking.spec"), include_str!("../../../models/binpacking.param")),
    ("meb", include_str!("../../../models/meb.spec"), include_str!("../../../models/meb.param")),
    (
        "violation_example",
        include_str!("../../../models/violation_example.spec"),
        include_str!("../../../models/violation_example.param"),
    ),
];

#[test]
fn corpus_round_trips_through_the_printer() {
    for (name, spec, params) in MODELS {
        let a = parse_spec(spec).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = a.to_string();
        let b = parse_spec(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        assert_eq!(a, b, "{name}");
        let p = parse_params(params).unwrap();
        instantiate(&a, &p).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn knapsack_shape() {
    let s = parse_spec(MODELS[2].1).unwrap();
    assert_eq!(s.givens().count(), 4);
    let finds: Vec<_> = s.finds().collect();
    assert_eq!(finds.len(), 1);
    assert!(matches!(finds[0].1, cbls_core::lang::ast::DomainExpr::Set(..)));
    assert_eq!(s.constraints().count(), 1);
    assert_eq!(s.objective().unwrap().0, Direction::Maximising);
}

#[test]
fn sonet_instantiates_nested_bounds() {
    let m = instantiate(&parse_spec(MODELS[0].1).unwrap(), &parse_params(MODELS[0].2).unwrap()).unwrap();
    let Domain::Set { card, inner } = &m.finds[0].domain else { panic!() };
    assert_eq!(*card, Card { min: 0, max: Some(2) });
    let Domain::Set { card, inner } = &**inner else { panic!() };
    assert_eq!(*card, Card { min: 2, max: Some(3) });
    assert_eq!(**inner, Domain::int(1, 8));
    let demand = m.param("demand").unwrap();
    assert_eq!(demand, &Plain::set([Plain::ints(&[1, 3]), Plain::ints(&[3, 4])]));
}

#[test]
fn tsp_instantiates_injective_sequence() {
    let spec = parse_spec(MODELS[1].1).unwrap();
    let params = parse_params("letting nCities be 4\nletting distances be function((1,1) --> 0)").unwrap();
    // A partial distance table is rejected by the total attribute.
    assert!(matches!(instantiate(&spec, &params), Err(LangError::Invalid { .. })));
    let m = instantiate(&spec, &parse_params(MODELS[1].2).unwrap()).unwrap();
    let Domain::Seq { card, injective, inner } = &m.finds[0].domain else { panic!() };
    assert_eq!((*card, *injective), (Card::exact(6), true));
    assert_eq!(**inner, Domain::int(1, 6));
    assert!(m.param("maxDistance").is_some());
}

#[test]
fn instantiation_errors() {
    let spec = parse_spec("find s : sequence of int(1..3)").unwrap();
    assert!(matches!(instantiate(&spec, &Default::default()), Err(LangError::Unbounded { .. })));
    let spec = parse_spec("given n : int\nfind x : int(1..n)").unwrap();
    assert_eq!(instantiate(&spec, &Default::default()), Err(LangError::MissingGiven("n".into())));
    let spec = parse_spec("find x : int(1..3)\nsuch that x + true = 1").unwrap();
    assert!(matches!(instantiate(&spec, &Default::default()), Err(LangError::Type { .. })));
    let spec = parse_spec("find x : int(1..3)\nsuch that y = 1").unwrap();
    assert!(matches!(instantiate(&spec, &Default::default()), Err(LangError::UnknownIdent { .. })));
}

#[test]
fn parameter_files() {
    let p = parse_params("letting capacity be 10").unwrap();
    assert_eq!(p.bindings.len(), 1);
    let p = parse_params("letting demand be {{1,3},{3,4}}").unwrap();
    assert!(matches!(p.get("demand"), Some(cbls_core::lang::ast::LettingValue::Expr(_))));
    assert!(matches!(parse_params("letting a be 1\nletting a be 2"), Err(LangError::Duplicate { .. })));
    assert!(matches!(parse_params("find x : bool"), Err(LangError::Syntax { .. })));
}
