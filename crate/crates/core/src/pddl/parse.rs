use std::collections::{BTreeMap, BTreeSet};

use super::sexpr::{self, SExpr};
use super::{ActionSchema, AtomSchema, Domain, GroundAtom, PddlError, Problem, Term};

const SUPPORTED_REQUIREMENTS: [&str; 2] = [":strips", ":typing"];

/// Keywords that mark constructs outside typed STRIPS.
fn unsupported_keyword(head: &str) -> Option<&'static str> {
    Some(match head {
        "not" => "negative preconditions",
        "or" => "disjunctive preconditions",
        "imply" => "implications",
        "exists" => "existential preconditions",
        "forall" => "universal quantification",
        "when" => "conditional effects",
        "=" => "equality",
        "increase" | "decrease" | "assign" | "scale-up" | "scale-down" => "numeric fluents",
        _ => return None,
    })
}

/// Splits `a b - t c - u d` into `(name, type)` pairs; untyped names are
/// of type `object`.
fn typed_list(items: &[SExpr]) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = items[i].expect_symbol("a name")?;
        if s == "-" {
            let t = items.get(i + 1).ok_or_else(|| items[i].error("missing type after `-`"))?;
            if t.head() == Some("either") {
                return Err(PddlError::unsupported("either types"));
            }
            let t = t.expect_symbol("a type name")?;
            for name in pending.drain(..) {
                out.push((name, t.to_string()));
            }
            i += 2;
        } else {
            pending.push(s.to_string());
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|n| (n, "object".to_string())));
    Ok(out)
}

fn check_define<'a>(e: &'a SExpr, kind: &str) -> Result<(&'a [SExpr], String), PddlError> {
    let items = e.expect_list("a `(define ...)` form")?;
    if e.head() != Some("define") {
        return Err(e.error("expected `define`"));
    }
    let header = items.get(1).ok_or_else(|| e.error(format!("missing `({kind} <name>)`")))?;
    let h = header.expect_list(&format!("`({kind} <name>)`"))?;
    if header.head() != Some(kind) || h.len() != 2 {
        return Err(header.error(format!("expected `({kind} <name>)`")));
    }
    Ok((&items[2..], h[1].expect_symbol("a name")?.to_string()))
}

/// Parses a domain description in typed STRIPS.
pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let root = sexpr::parse(text)?;
    let (sections, name) = check_define(&root, "domain")?;
    let mut domain = Domain {
        name,
        requirements: Vec::new(),
        types: BTreeMap::new(),
        constants: Vec::new(),
        predicates: BTreeMap::new(),
        schemas: Vec::new(),
    };
    let mut actions = Vec::new();
    for sec in sections {
        let items = sec.expect_list("a domain section")?;
        let body = &items[1..];
        match sec.head() {
            Some(":requirements") => {
                for r in body {
                    let r = r.expect_symbol("a requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r) {
                        return Err(PddlError::unsupported(r));
                    }
                    domain.requirements.push(r.to_string());
                }
            }
            Some(":types") => {
                for (t, parent) in typed_list(body)? {
                    if t != "object" {
                        domain.types.insert(t, parent);
                    }
                }
            }
            Some(":constants") => domain.constants.extend(typed_list(body)?),
            Some(":predicates") => {
                for p in body {
                    let items = p.expect_list("a predicate declaration")?;
                    let name = items
                        .first()
                        .ok_or_else(|| p.error("empty predicate declaration"))?
                        .expect_symbol("a predicate name")?;
                    let params = typed_list(&items[1..])?;
                    domain.predicates.insert(name.to_string(), params.into_iter().map(|(_, t)| t).collect());
                }
            }
            Some(":action") => actions.push(sec),
            Some(":functions") => return Err(PddlError::unsupported("numeric fluents")),
            Some(":derived") => return Err(PddlError::unsupported("derived predicates")),
            Some(":durative-action") => return Err(PddlError::unsupported("durative actions")),
            Some(other) => return Err(sec.error(format!("unknown section `{other}`"))),
            None => return Err(sec.error("expected a section keyword")),
        }
    }
    // a type named only as a parent is implicitly a child of `object`
    let parents: Vec<String> = domain.types.values().filter(|p| !domain.has_type(p)).cloned().collect();
    for p in parents {
        domain.types.insert(p, "object".to_string());
    }
    for ts in domain.predicates.values() {
        for t in ts {
            if !domain.has_type(t) {
                return Err(PddlError::Undeclared { kind: "type", name: t.clone() });
            }
        }
    }
    for a in actions {
        let schema = parse_action(a, &domain)?;
        domain.schemas.push(schema);
    }
    Ok(domain)
}

fn parse_action(e: &SExpr, domain: &Domain) -> Result<ActionSchema, PddlError> {
    let items = e.list().unwrap();
    let name = items.get(1).ok_or_else(|| e.error("missing action name"))?.expect_symbol("an action name")?;
    let mut schema = ActionSchema {
        name: name.to_string(),
        parameters: Vec::new(),
        precondition: Vec::new(),
        add: Vec::new(),
        delete: Vec::new(),
    };
    let mut i = 2;
    let mut precondition = None;
    let mut effect = None;
    while i < items.len() {
        let key = items[i].expect_symbol("an action keyword")?;
        let value = items.get(i + 1).ok_or_else(|| items[i].error(format!("missing value for `{key}`")))?;
        match key {
            ":parameters" => {
                schema.parameters = typed_list(value.expect_list("a parameter list")?)?;
                for (p, t) in &schema.parameters {
                    if !p.starts_with('?') {
                        return Err(value.error(format!("parameter `{p}` must start with `?`")));
                    }
                    if !domain.has_type(t) {
                        return Err(PddlError::Undeclared { kind: "type", name: t.clone() });
                    }
                }
            }
            ":precondition" => precondition = Some(value),
            ":effect" => effect = Some(value),
            other => return Err(items[i].error(format!("unknown action keyword `{other}`"))),
        }
        i += 2;
    }
    if let Some(p) = precondition {
        for lit in conjuncts(p)? {
            if let Some(kw) = lit.head().and_then(unsupported_keyword) {
                return Err(PddlError::unsupported(kw));
            }
            schema.precondition.push(atom_schema(lit, &schema.parameters, domain)?);
        }
    }
    if let Some(eff) = effect {
        for lit in conjuncts(eff)? {
            if lit.head() == Some("not") {
                let inner = lit.list().unwrap();
                if inner.len() != 2 {
                    return Err(lit.error("`not` takes one atom"));
                }
                if let Some(kw) = inner[1].head().and_then(unsupported_keyword) {
                    return Err(PddlError::unsupported(kw));
                }
                schema.delete.push(atom_schema(&inner[1], &schema.parameters, domain)?);
            } else {
                if let Some(kw) = lit.head().and_then(unsupported_keyword) {
                    return Err(PddlError::unsupported(kw));
                }
                schema.add.push(atom_schema(lit, &schema.parameters, domain)?);
            }
        }
    }
    Ok(schema)
}

/// Members of an `(and ...)`, a single literal, or nothing for `()`.
fn conjuncts(e: &SExpr) -> Result<Vec<&SExpr>, PddlError> {
    let items = e.expect_list("a formula")?;
    if items.is_empty() {
        return Ok(Vec::new());
    }
    if e.head() == Some("and") {
        let mut out = Vec::new();
        for c in &items[1..] {
            out.extend(conjuncts(c)?);
        }
        Ok(out)
    } else {
        Ok(vec![e])
    }
}

fn atom_schema(e: &SExpr, params: &[(String, String)], domain: &Domain) -> Result<AtomSchema, PddlError> {
    let items = e.expect_list("an atom")?;
    let pred = items.first().ok_or_else(|| e.error("empty atom"))?.expect_symbol("a predicate")?;
    let types = domain
        .predicates
        .get(pred)
        .ok_or_else(|| PddlError::Undeclared { kind: "predicate", name: pred.to_string() })?;
    if types.len() != items.len() - 1 {
        return Err(PddlError::Arity { predicate: pred.to_string(), expected: types.len(), found: items.len() - 1 });
    }
    let mut args = Vec::new();
    for (arg, want) in items[1..].iter().zip(types) {
        let s = arg.expect_symbol("an argument")?;
        if s.starts_with('?') {
            let k = params
                .iter()
                .position(|(p, _)| p == s)
                .ok_or_else(|| PddlError::Undeclared { kind: "parameter", name: s.to_string() })?;
            if !domain.is_subtype(&params[k].1, want) {
                return Err(PddlError::TypeMismatch { object: s.to_string(), expected: want.clone() });
            }
            args.push(Term::Param(k));
        } else {
            let (_, t) = domain
                .constants
                .iter()
                .find(|(c, _)| c == s)
                .ok_or_else(|| PddlError::Undeclared { kind: "constant", name: s.to_string() })?;
            if !domain.is_subtype(t, want) {
                return Err(PddlError::TypeMismatch { object: s.to_string(), expected: want.clone() });
            }
            args.push(Term::Const(s.to_string()));
        }
    }
    Ok(AtomSchema { predicate: pred.to_string(), args })
}

fn ground_atom(e: &SExpr, domain: &Domain, objects: &BTreeMap<String, String>) -> Result<GroundAtom, PddlError> {
    let items = e.expect_list("an atom")?;
    let pred = items.first().ok_or_else(|| e.error("empty atom"))?.expect_symbol("a predicate")?;
    let types = domain
        .predicates
        .get(pred)
        .ok_or_else(|| PddlError::Undeclared { kind: "predicate", name: pred.to_string() })?;
    if types.len() != items.len() - 1 {
        return Err(PddlError::Arity { predicate: pred.to_string(), expected: types.len(), found: items.len() - 1 });
    }
    let mut args = Vec::new();
    for (arg, want) in items[1..].iter().zip(types) {
        let s = arg.expect_symbol("an object")?;
        let t = objects.get(s).ok_or_else(|| PddlError::Undeclared { kind: "object", name: s.to_string() })?;
        if !domain.is_subtype(t, want) {
            return Err(PddlError::TypeMismatch { object: s.to_string(), expected: want.clone() });
        }
        args.push(s.to_string());
    }
    Ok(GroundAtom { predicate: pred.to_string(), args })
}

/// Parses a problem against `domain`. The goal must be a conjunction of
/// positive atoms.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, PddlError> {
    let root = sexpr::parse(text)?;
    let (sections, name) = check_define(&root, "problem")?;
    let mut problem = Problem {
        name,
        domain: String::new(),
        objects: domain.constants.clone(),
        init: BTreeSet::new(),
        goal: BTreeSet::new(),
    };
    let mut init = None;
    let mut goal = None;
    for sec in sections {
        let items = sec.expect_list("a problem section")?;
        let body = &items[1..];
        match sec.head() {
            Some(":domain") => {
                problem.domain = body.first().ok_or_else(|| sec.error("missing domain name"))?.expect_symbol("a name")?.to_string();
                if problem.domain != domain.name {
                    return Err(sec.error(format!("problem is for domain `{}`, not `{}`", problem.domain, domain.name)));
                }
            }
            Some(":requirements") => {
                for r in body {
                    let r = r.expect_symbol("a requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r) {
                        return Err(PddlError::unsupported(r));
                    }
                }
            }
            Some(":objects") => {
                for (o, t) in typed_list(body)? {
                    if !domain.has_type(&t) {
                        return Err(PddlError::Undeclared { kind: "type", name: t });
                    }
                    problem.objects.push((o, t));
                }
            }
            Some(":init") => init = Some(body),
            Some(":goal") => {
                if body.len() != 1 {
                    return Err(sec.error("`:goal` takes one formula"));
                }
                goal = Some(&body[0]);
            }
            Some(":metric") => return Err(PddlError::unsupported("action costs")),
            Some(other) => return Err(sec.error(format!("unknown section `{other}`"))),
            None => return Err(sec.error("expected a section keyword")),
        }
    }
    let objects: BTreeMap<String, String> = problem.objects.iter().cloned().collect();
    if objects.len() != problem.objects.len() {
        return Err(root.error("duplicate object declaration"));
    }
    for a in init.unwrap_or(&[]) {
        if a.head() == Some("=") {
            return Err(PddlError::unsupported("numeric fluents"));
        }
        problem.init.insert(ground_atom(a, domain, &objects)?);
    }
    if let Some(g) = goal {
        let lits = conjuncts(g)?;
        for lit in lits {
            if lit.head().and_then(unsupported_keyword).is_some() {
                return Err(PddlError::NonConjunctiveGoal);
            }
            problem.goal.insert(ground_atom(lit, domain, &objects)?);
        }
    }
    Ok(problem)
}
