#![allow(dead_code)]

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sensreach_core::graph::{MethodDecl, TypeKind, Visibility};
use sensreach_core::{CallSite, Dispatch, IntraPackageCallGraph, MethodRef, TypeRecord};

pub fn mref(owner: &str, name: &str) -> MethodRef {
    MethodRef::new(owner, name, None).unwrap()
}

pub fn ty(
    fqn: &str,
    kind: TypeKind,
    sup: Option<&str>,
    ifaces: &[&str],
    methods: &[(&str, bool)],
) -> TypeRecord {
    TypeRecord {
        fqn: fqn.into(),
        kind,
        superclass: sup.map(Into::into),
        interfaces: ifaces.iter().map(|s| s.to_string()).collect(),
        methods: methods
            .iter()
            .map(|(n, a)| MethodDecl {
                name: (*n).into(),
                descriptor: None,
                is_abstract: *a,
                visibility: Visibility::Public,
            })
            .collect(),
        has_public_constructor: kind == TypeKind::Class,
        visibility: Visibility::Public,
    }
}

pub fn class(fqn: &str, sup: Option<&str>, ifaces: &[&str], methods: &[&str]) -> TypeRecord {
    let m: Vec<(&str, bool)> = methods.iter().map(|n| (*n, false)).collect();
    ty(fqn, TypeKind::Class, sup, ifaces, &m)
}

pub fn interface(fqn: &str, methods: &[&str]) -> TypeRecord {
    let m: Vec<(&str, bool)> = methods.iter().map(|n| (*n, true)).collect();
    ty(fqn, TypeKind::Interface, None, &[], &m)
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
    coords: &str,
    types: Vec<TypeRecord>,
    call_sites: Vec<CallSite>,
) -> IntraPackageCallGraph {
    IntraPackageCallGraph {
        package: coords.parse().unwrap(),
        types,
        call_sites,
    }
}

const SENSITIVE: [(&str, &str, Dispatch); 5] = [
    ("java.io.File", "exists", Dispatch::Virtual),
    ("java.lang.System", "getenv", Dispatch::Static),
    ("java.net.Socket", "connect", Dispatch::Virtual),
    ("java.lang.Runtime", "exec", Dispatch::Virtual),
    (
        "javax.servlet.http.HttpSession",
        "getAttribute",
        Dispatch::Interface,
    ),
];

/// Two dependency packages and `packages` x `versions` core graphs that use
/// them, written as JSON under `root/deps` and `root/cores`.
pub fn write_fixture_tree(root: &Path, packages: usize, versions: usize) {
    let deps = [
        graph(
            "org.dep:io:1.0",
            vec![
                interface("org.dep.io.Store", &["load"]),
                class(
                    "org.dep.io.FileStore",
                    None,
                    &["org.dep.io.Store"],
                    &["load"],
                ),
                class(
                    "org.dep.io.NetStore",
                    None,
                    &["org.dep.io.Store"],
                    &["load"],
                ),
            ],
            vec![
                site(
                    ("org.dep.io.FileStore", "load"),
                    ("java.io.File", "exists"),
                    Dispatch::Virtual,
                ),
                site(
                    ("org.dep.io.NetStore", "load"),
                    ("java.net.Socket", "connect"),
                    Dispatch::Virtual,
                ),
            ],
        ),
        graph(
            "org.dep:servlet:2.0",
            vec![interface(
                "javax.servlet.http.HttpSession",
                &["getAttribute"],
            )],
            vec![],
        ),
    ];
    std::fs::create_dir_all(root.join("deps")).unwrap();
    std::fs::create_dir_all(root.join("cores")).unwrap();
    for d in &deps {
        let name = format!("{}.json", d.package.artifact);
        std::fs::write(root.join("deps").join(name), d.to_json()).unwrap();
    }
    for p in 0..packages {
        for v in 0..versions {
            let mut rng = ChaCha8Rng::seed_from_u64((p * 1000 + v) as u64);
            let owner = format!("com.lib{p}.Api");
            let helper = format!("com.lib{p}.Helper");
            let mut sites = vec![
                site((&owner, "open"), (&helper, "run"), Dispatch::Static),
                site(
                    (&owner, "open"),
                    ("org.dep.io.Store", "load"),
                    Dispatch::Interface,
                ),
            ];
            for _ in 0..(v + rng.gen_range(0..3)) {
                let (o, n, d) = *SENSITIVE.choose(&mut rng).unwrap();
                let caller = if rng.gen_bool(0.5) {
                    (owner.as_str(), "open")
                } else {
                    (helper.as_str(), "run")
                };
                let mut s = site(caller, (o, n), d);
                s.multiplicity = rng.gen_range(1..4);
                sites.push(s);
            }
            let core = graph(
                &format!("com.lib{p}:lib{p}:1.{v}"),
                vec![
                    class(&owner, None, &[], &["open"]),
                    class(&helper, None, &[], &["run"]),
                ],
                sites,
            );
            let name = format!("lib{p}-1.{v}.json");
            std::fs::write(root.join("cores").join(name), core.to_json()).unwrap();
        }
    }
}
