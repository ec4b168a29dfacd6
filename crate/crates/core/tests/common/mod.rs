#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sensreach_core::graph::{MethodDecl, TypeKind, Visibility};
use sensreach_core::{
    CallSite, Dispatch, IntraPackageCallGraph, MethodRef, PackageCoordinates, TypeRecord,
};

pub const METHOD_NAMES: [&str; 3] = ["m0", "m1", "m2"];

pub const EXTERNAL_CALLEES: [(&str, &str); 4] = [
    ("java.io.File", "exists"),
    ("java.lang.Class", "forName"),
    ("java.net.Socket", "connect"),
    ("java.util.List", "size"),
];

pub fn coords(s: &str) -> PackageCoordinates {
    s.parse().unwrap()
}

pub fn mref(owner: &str, name: &str) -> MethodRef {
    MethodRef::new(owner, name, None).unwrap()
}

pub fn decl(name: &str, is_abstract: bool) -> MethodDecl {
    MethodDecl {
        name: name.into(),
        descriptor: None,
        is_abstract,
        visibility: Visibility::Public,
    }
}

pub fn ty(
    fqn: &str,
    kind: TypeKind,
    sup: Option<&str>,
    ifaces: &[&str],
    methods: Vec<MethodDecl>,
) -> TypeRecord {
    TypeRecord {
        fqn: fqn.into(),
        kind,
        superclass: sup.map(Into::into),
        interfaces: ifaces.iter().map(|s| s.to_string()).collect(),
        methods,
        has_public_constructor: kind == TypeKind::Class,
        visibility: Visibility::Public,
    }
}

pub fn class(fqn: &str, sup: Option<&str>, ifaces: &[&str], methods: &[&str]) -> TypeRecord {
    ty(
        fqn,
        TypeKind::Class,
        sup,
        ifaces,
        methods.iter().map(|m| decl(m, false)).collect(),
    )
}

pub fn interface(fqn: &str, supers: &[&str], methods: &[&str]) -> TypeRecord {
    ty(
        fqn,
        TypeKind::Interface,
        None,
        supers,
        methods.iter().map(|m| decl(m, true)).collect(),
    )
}

pub fn site(caller: (&str, &str), callee: (&str, &str), dispatch: Dispatch) -> CallSite {
    CallSite {
        caller: mref(caller.0, caller.1),
        declared_callee: mref(callee.0, callee.1),
        dispatch,
        multiplicity: 1,
    }
}

pub fn graph(
    package: &str,
    types: Vec<TypeRecord>,
    call_sites: Vec<CallSite>,
) -> IntraPackageCallGraph {
    IntraPackageCallGraph {
        package: coords(package),
        types,
        call_sites,
    }
}

/// A set of package graphs sharing one random acyclic type hierarchy. Types
/// may extend `ext.*` classes that no package declares.
pub struct World {
    pub graphs: Vec<IntraPackageCallGraph>,
}

pub fn random_world(seed: u64, n_types: usize, n_packages: usize) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut types: Vec<(usize, TypeRecord)> = Vec::new();
    for i in 0..n_types {
        let pkg = rng.gen_range(0..n_packages);
        let fqn = format!("p{pkg}.T{i}");
        let roll: f64 = rng.gen();
        let kind = if roll < 0.4 {
            TypeKind::Class
        } else if roll < 0.6 {
            TypeKind::AbstractClass
        } else {
            TypeKind::Interface
        };
        let earlier_classes: Vec<&str> = types
            .iter()
            .filter(|(_, t)| !t.is_interface())
            .map(|(_, t)| t.fqn.as_str())
            .collect();
        let superclass = if kind == TypeKind::Interface {
            None
        } else {
            let r: f64 = rng.gen();
            if r < 0.6 && !earlier_classes.is_empty() {
                Some(earlier_classes.choose(&mut rng).unwrap().to_string())
            } else if r < 0.7 {
                Some(format!("ext.Base{}", rng.gen_range(0..2)))
            } else {
                None
            }
        };
        let interfaces: Vec<String> = types
            .iter()
            .filter(|(_, t)| t.is_interface())
            .filter(|_| rng.gen_bool(0.25))
            .map(|(_, t)| t.fqn.clone())
            .collect();
        let mut methods = Vec::new();
        for m in METHOD_NAMES {
            if !rng.gen_bool(0.4) {
                continue;
            }
            let is_abstract = match kind {
                TypeKind::Class => false,
                TypeKind::AbstractClass => rng.gen_bool(0.5),
                TypeKind::Interface => rng.gen_bool(0.7),
            };
            methods.push(decl(m, is_abstract));
        }
        let mut t = ty(&fqn, kind, None, &[], methods);
        t.superclass = superclass;
        t.interfaces = interfaces;
        types.push((pkg, t));
    }

    let mut graphs: Vec<IntraPackageCallGraph> = (0..n_packages)
        .map(|p| graph(&format!("g:p{p}:1"), Vec::new(), Vec::new()))
        .collect();
    for (pkg, t) in &types {
        graphs[*pkg].types.push(t.clone());
    }
    for g in graphs.iter_mut() {
        if g.types.is_empty() {
            continue;
        }
        for _ in 0..rng.gen_range(0..12) {
            let caller_owner = g.types.choose(&mut rng).unwrap().fqn.clone();
            let caller = mref(&caller_owner, "run");
            let (declared_callee, dispatch) = if rng.gen_bool(0.3) {
                let (o, n) = EXTERNAL_CALLEES.choose(&mut rng).unwrap();
                let d = if *o == "java.util.List" {
                    Dispatch::Interface
                } else {
                    Dispatch::Virtual
                };
                (mref(o, n), d)
            } else {
                let (_, t) = types.choose(&mut rng).unwrap();
                let d = if t.is_interface() {
                    Dispatch::Interface
                } else {
                    *[Dispatch::Virtual, Dispatch::Static, Dispatch::Special]
                        .choose(&mut rng)
                        .unwrap()
                };
                (mref(&t.fqn, METHOD_NAMES.choose(&mut rng).unwrap()), d)
            };
            g.call_sites.push(CallSite {
                caller,
                declared_callee,
                dispatch,
                multiplicity: rng.gen_range(1..4),
            });
        }
    }
    World { graphs }
}
