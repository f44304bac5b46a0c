//! Minor conditions: height-one identities between function symbols.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use itertools::Itertools;
use thiserror::Error;

use crate::digraph::Digraph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConditionError {
    #[error("unknown condition `{0}`")]
    UnknownCondition(String),
    #[error("bad parameter for {0}")]
    BadParameter(String),
    #[error("loop condition of a digraph without edges")]
    EmptyEdgeSet,
    #[error("projection search space too large ({0} assignments)")]
    ArityTooLarge(u128),
    #[error("cannot parse identity `{0}`")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionSymbol {
    pub name: String,
    pub arity: usize,
}

/// `symbol(x_{args[0]}, …, x_{args[k-1]})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub symbol: usize,
    pub args: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MinorIdentity {
    pub vars: usize,
    pub left: Term,
    pub right: Term,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinorCondition {
    pub name: String,
    pub symbols: Vec<FunctionSymbol>,
    pub identities: Vec<MinorIdentity>,
    /// Level-wise satisfaction is equivalent to satisfaction on balanced digraphs.
    pub levelwise_sound: bool,
    /// Symbols constrained to be totally symmetric. When `identities` is empty the
    /// family of symmetry identities is implicit and never listed.
    pub totally_symmetric: Vec<usize>,
}

impl MinorCondition {
    /// Builds a condition from identity chains such as `p(x,y,y) = q(y,x,x) = q(x,x,y)`.
    /// Each chain expands into consecutive pairs.
    pub fn from_chains(name: &str, chains: &[String]) -> Result<Self, ConditionError> {
        let mut b = Builder::default();
        for c in chains {
            b.chain(c)?;
        }
        Ok(MinorCondition {
            name: name.to_string(),
            symbols: b.symbols,
            identities: b.identities,
            levelwise_sound: false,
            totally_symmetric: Vec::new(),
        })
    }

    pub fn symbol(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn implicit_symmetry(&self) -> bool {
        self.identities.is_empty() && !self.totally_symmetric.is_empty()
    }

    fn sound(mut self, flag: bool) -> Self {
        self.levelwise_sound = flag;
        self
    }
}

#[derive(Default)]
struct Builder {
    symbols: Vec<FunctionSymbol>,
    identities: Vec<MinorIdentity>,
}

impl Builder {
    fn term(&mut self, text: &str) -> Result<(usize, Vec<String>), ConditionError> {
        let bad = || ConditionError::Syntax(text.to_string());
        let text = text.trim();
        let open = text.find('(').ok_or_else(bad)?;
        if !text.ends_with(')') {
            return Err(bad());
        }
        let name = text[..open].trim();
        let args: Vec<String> = text[open + 1..text.len() - 1].split(',').map(|a| a.trim().to_string()).collect();
        if name.is_empty() || args.iter().any(|a| a.is_empty()) {
            return Err(bad());
        }
        let sym = match self.symbols.iter().position(|s| s.name == name) {
            Some(i) if self.symbols[i].arity == args.len() => i,
            Some(_) => return Err(bad()),
            None => {
                self.symbols.push(FunctionSymbol { name: name.to_string(), arity: args.len() });
                self.symbols.len() - 1
            }
        };
        Ok((sym, args))
    }

    fn chain(&mut self, text: &str) -> Result<(), ConditionError> {
        let terms = text.split('=').map(|t| self.term(t)).collect::<Result<Vec<_>, _>>()?;
        if terms.len() < 2 {
            return Err(ConditionError::Syntax(text.to_string()));
        }
        for (l, r) in terms.iter().tuple_windows() {
            let mut names: Vec<String> = Vec::new();
            let mut idx = |v: &String| match names.iter().position(|n| n == v) {
                Some(i) => i,
                None => {
                    names.push(v.clone());
                    names.len() - 1
                }
            };
            let left = Term { symbol: l.0, args: l.1.iter().map(&mut idx).collect() };
            let right = Term { symbol: r.0, args: r.1.iter().map(&mut idx).collect() };
            self.identities.push(MinorIdentity { vars: names.len(), left, right });
        }
        Ok(())
    }
}

fn term_str(sym: &str, args: &[&str]) -> String {
    format!("{sym}({})", args.join(","))
}

/// Splits `NAME(a,b,…)` into the name and its integer parameters.
pub fn parse_name(spec: &str) -> Result<(String, Vec<u64>), ConditionError> {
    let spec = spec.trim();
    let unknown = || ConditionError::UnknownCondition(spec.to_string());
    match spec.find('(') {
        None => Ok((spec.to_string(), Vec::new())),
        Some(i) => {
            let inner = spec[i + 1..].strip_suffix(')').ok_or_else(unknown)?;
            let params = inner
                .split(',')
                .map(|p| p.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| unknown())?;
            Ok((spec[..i].trim().to_string(), params))
        }
    }
}

/// Looks up a named condition, e.g. `KMM`, `HM(4)`, `TS(12)`, `Sigma(2,3)`.
pub fn make_condition(spec: &str) -> Result<MinorCondition, ConditionError> {
    let (name, p) = parse_name(spec)?;
    let bad = || ConditionError::BadParameter(spec.to_string());
    let one = |lo: u64| match p[..] {
        [n] if n >= lo && n <= 4096 => Ok(n as usize),
        _ => Err(bad()),
    };
    let none = || if p.is_empty() { Ok(()) } else { Err(bad()) };
    let c = match name.as_str() {
        "KMM" => none().and_then(|_| kmm())?,
        "Siggers4" | "Siggers" => none().and_then(|_| siggers4())?,
        "WNU" => wnu(one(2)?)?,
        "WNU34" => none().and_then(|_| wnu34())?,
        "NU" => nu(one(3)?)?,
        "Majority" => none().and_then(|_| nu(3))?,
        "Maltsev" => none().and_then(|_| maltsev())?,
        "HM" => hm(one(1)?)?,
        "J" => jonsson(one(0)?)?,
        "KK" => kearnes_kiss(one(2)?)?,
        "HMcK" => hobby_mckenzie(one(0)?)?,
        "NN" => noname(one(0)?)?,
        "TS" => totally_symmetric(one(2)?)?,
        "GFS" => elevator(one(1)?)?,
        "Sigma" => {
            if p.is_empty() || p.contains(&0) || p.iter().sum::<u64>() > 64 {
                return Err(bad());
            }
            let set: BTreeSet<u64> = p.iter().copied().collect();
            let lengths: Vec<u64> = set.into_iter().collect();
            let mut c = loop_condition(&Digraph::cycles(&lengths))?;
            c.name = format!("Sigma({})", lengths.iter().join(","));
            c
        }
        _ => return Err(ConditionError::UnknownCondition(spec.to_string())),
    };
    Ok(MinorCondition { name: spec.replace(' ', ""), ..c })
}

fn kmm() -> Result<MinorCondition, ConditionError> {
    let c = MinorCondition::from_chains("KMM", &["p(x,y,y) = q(y,x,x) = q(x,x,y)".into(), "p(x,y,x) = q(x,y,x)".into()])?;
    Ok(c.sound(true))
}

fn siggers4() -> Result<MinorCondition, ConditionError> {
    MinorCondition::from_chains("Siggers4", &["f(a,r,e,a) = f(r,a,r,e)".into()])
}

/// `f(y,x,…,x) = f(x,y,…,x) = … = f(x,…,x,y)`.
fn wnu_chain(sym: &str, k: usize) -> Vec<String> {
    (0..k)
        .map(|i| {
            let args: Vec<&str> = (0..k).map(|j| if i == j { "y" } else { "x" }).collect();
            term_str(sym, &args)
        })
        .collect()
}

fn wnu(k: usize) -> Result<MinorCondition, ConditionError> {
    let c = MinorCondition::from_chains("WNU", &[wnu_chain("f", k).join(" = ")])?;
    Ok(c.sound(true))
}

fn wnu34() -> Result<MinorCondition, ConditionError> {
    let mut chain = wnu_chain("f", 3);
    chain.extend(wnu_chain("g", 4).into_iter().rev());
    let c = MinorCondition::from_chains("WNU34", &[chain.join(" = ")])?;
    Ok(c.sound(true))
}

fn nu(n: usize) -> Result<MinorCondition, ConditionError> {
    let mut chain = vec![term_str("f", &vec!["x"; n])];
    chain.extend(wnu_chain("f", n));
    MinorCondition::from_chains("NU", &[chain.join(" = ")])
}

fn maltsev() -> Result<MinorCondition, ConditionError> {
    let c = MinorCondition::from_chains("Maltsev", &["f(y,y,x) = f(x,x,x) = f(x,y,y)".into()])?;
    Ok(c.sound(true))
}

fn hm(n: usize) -> Result<MinorCondition, ConditionError> {
    let mut ch = vec!["p1(x,x,x) = p1(x,y,y)".to_string()];
    for i in 1..n {
        ch.push(format!("p{i}(x,x,y) = p{}(x,y,y)", i + 1));
    }
    ch.push(format!("p{n}(x,x,y) = p{n}(y,y,y)"));
    Ok(MinorCondition::from_chains("HM", &ch)?.sound(true))
}

fn jonsson(n: usize) -> Result<MinorCondition, ConditionError> {
    let mut ch = vec!["j1(x,x,x) = j1(x,x,y)".to_string()];
    for i in 1..=n {
        ch.push(format!("j{}(x,y,y) = j{}(x,y,y)", 2 * i - 1, 2 * i));
    }
    for i in 1..=2 * n + 1 {
        ch.push(format!("j{i}(x,y,x) = j{i}(x,x,x)"));
    }
    for i in 1..=n {
        ch.push(format!("j{}(x,x,y) = j{}(x,x,y)", 2 * i, 2 * i + 1));
    }
    let last = 2 * n + 1;
    ch.push(format!("j{last}(x,y,y) = j{last}(y,y,y)"));
    MinorCondition::from_chains("J", &ch)
}

/// Links between `d_0` or `d_n` are dropped: those symbols are unconstrained
/// otherwise, so each such identity can always be met by copying its neighbour.
fn kearnes_kiss(n: usize) -> Result<MinorCondition, ConditionError> {
    let mut ch = vec!["d1(x,y,y) = d1(x,x,x)".to_string()];
    for i in 1..n - 1 {
        if i % 2 == 0 {
            ch.push(format!("d{i}(x,y,y) = d{}(x,y,y)", i + 1));
            ch.push(format!("d{i}(x,y,x) = d{}(x,y,x)", i + 1));
        } else {
            ch.push(format!("d{i}(x,x,y) = d{}(x,x,y)", i + 1));
        }
    }
    let m = n - 1;
    if n % 2 == 1 {
        ch.push(format!("d{m}(x,y,y) = d{m}(y,y,y)"));
        ch.push(format!("d{m}(x,y,x) = d{m}(x,x,x)"));
    } else {
        ch.push(format!("d{m}(x,x,y) = d{m}(y,y,y)"));
    }
    MinorCondition::from_chains("KK", &ch)
}

fn hobby_mckenzie(n: usize) -> Result<MinorCondition, ConditionError> {
    if n == 0 {
        return maltsev();
    }
    let mut ch = vec!["d1(x,y,y) = d1(x,x,x)".to_string()];
    for i in 1..n {
        if i % 2 == 0 {
            ch.push(format!("d{i}(x,y,y) = d{}(x,y,y)", i + 1));
        } else {
            ch.push(format!("d{i}(x,x,y) = d{}(x,x,y)", i + 1));
            ch.push(format!("d{i}(x,y,x) = d{}(x,y,x)", i + 1));
        }
    }
    ch.push(format!("d{n}(x,y,y) = p(x,y,y)"));
    ch.push("p(x,x,y) = e1(x,x,y)".to_string());
    for i in 1..n {
        if i % 2 == 1 {
            ch.push(format!("e{i}(x,y,y) = e{}(x,y,y)", i + 1));
            ch.push(format!("e{i}(x,y,x) = e{}(x,y,x)", i + 1));
        } else {
            ch.push(format!("e{i}(x,x,y) = e{}(x,x,y)", i + 1));
        }
    }
    if n % 2 == 1 {
        ch.push(format!("e{n}(x,y,y) = e{n}(y,y,y)"));
        ch.push(format!("e{n}(x,y,x) = e{n}(x,x,x)"));
    } else {
        ch.push(format!("e{n}(x,x,y) = e{n}(y,y,y)"));
    }
    MinorCondition::from_chains("HMcK", &ch)
}

fn noname(n: usize) -> Result<MinorCondition, ConditionError> {
    let mut ch = vec!["f0(x,y,y,z) = f0(x,x,x,x)".to_string()];
    for i in 0..n {
        ch.push(format!("f{i}(x,x,y,x) = f{}(x,y,y,x)", i + 1));
        ch.push(format!("f{i}(x,x,y,y) = f{}(x,y,y,y)", i + 1));
    }
    ch.push(format!("f{n}(x,x,y,z) = f{n}(z,z,z,z)"));
    MinorCondition::from_chains("NN", &ch)
}

/// Up to this arity the symmetry identities of `TS(n)` are listed explicitly.
pub const TS_EXPLICIT_MAX: usize = 4;

/// All `s(a) = s(b)` over tuples with equal variable sets, one per unordered pair
/// up to renaming of variables.
fn totally_symmetric(n: usize) -> Result<MinorCondition, ConditionError> {
    let symbols = vec![FunctionSymbol { name: format!("s{n}"), arity: n }];
    let mut identities = Vec::new();
    if n <= TS_EXPLICIT_MAX {
        for k in 2..=n {
            let surj: Vec<Vec<usize>> = (0..n)
                .map(|_| 0..k)
                .multi_cartesian_product()
                .filter(|t| (0..k).all(|v| t.contains(&v)))
                .collect();
            let perms: Vec<Vec<usize>> = (0..k).permutations(k).collect();
            let mut seen = BTreeSet::new();
            for (a, b) in surj.iter().tuple_combinations() {
                let key = perms
                    .iter()
                    .flat_map(|p| {
                        let pa: Vec<usize> = a.iter().map(|&v| p[v]).collect();
                        let pb: Vec<usize> = b.iter().map(|&v| p[v]).collect();
                        [(pa.clone(), pb.clone()), (pb, pa)]
                    })
                    .min()
                    .unwrap();
                if seen.insert(key.clone()) {
                    identities.push(MinorIdentity {
                        vars: k,
                        left: Term { symbol: 0, args: key.0 },
                        right: Term { symbol: 0, args: key.1 },
                    });
                }
            }
        }
    }
    Ok(MinorCondition {
        name: format!("TS({n})"),
        symbols,
        identities,
        levelwise_sound: true,
        totally_symmetric: vec![0],
    })
}

/// `f(x,x,y1,…,yn) = t_1 = … = t_n` where `t_k` puts `z` first, `y_k` second and
/// then `y1,…,yn` with `y_k` replaced by `z`.
fn elevator(n: usize) -> Result<MinorCondition, ConditionError> {
    let ys: Vec<String> = (1..=n).map(|i| format!("y{i}")).collect();
    let mut head = vec!["x".to_string(), "x".to_string()];
    head.extend(ys.iter().cloned());
    let mut chain = vec![format!("f({})", head.join(","))];
    for k in 0..n {
        let mut args = vec!["z".to_string(), ys[k].clone()];
        args.extend(ys.iter().enumerate().map(|(j, y)| if j == k { "z".to_string() } else { y.clone() }));
        chain.push(format!("f({})", args.join(",")));
    }
    MinorCondition::from_chains("GFS", &[chain.join(" = ")])
}

/// `Σ_G`: one symbol of arity `|E(g)|`, one identity sending each edge to its source
/// on the left and its target on the right.
pub fn loop_condition(g: &Digraph) -> Result<MinorCondition, ConditionError> {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    if edges.is_empty() {
        return Err(ConditionError::EmptyEdgeSet);
    }
    let mut index = HashMap::new();
    let mut var = |v: usize| {
        let k = index.len();
        *index.entry(v).or_insert(k)
    };
    let left: Vec<usize> = edges.iter().map(|&(u, _)| var(u)).collect();
    let right: Vec<usize> = edges.iter().map(|&(_, v)| var(v)).collect();
    Ok(MinorCondition {
        name: "Sigma".into(),
        symbols: vec![FunctionSymbol { name: "f".into(), arity: edges.len() }],
        identities: vec![MinorIdentity {
            vars: index.len(),
            left: Term { symbol: 0, args: left },
            right: Term { symbol: 0, args: right },
        }],
        levelwise_sound: false,
        totally_symmetric: Vec::new(),
    })
}

/// Satisfiable by projections: some choice of one coordinate per symbol makes every
/// identity an equation between equal variables.
pub fn is_trivial(c: &MinorCondition) -> Result<bool, ConditionError> {
    const CAP: u128 = 50_000_000;
    if c.totally_symmetric.iter().any(|&s| c.symbols[s].arity >= 2) {
        return Ok(false);
    }
    let space: u128 = c.symbols.iter().map(|s| s.arity as u128).product();
    if space > CAP {
        return Err(ConditionError::ArityTooLarge(space));
    }
    let ok = c
        .symbols
        .iter()
        .map(|s| 0..s.arity)
        .multi_cartesian_product()
        .any(|pick| c.identities.iter().all(|id| id.left.args[pick[id.left.symbol]] == id.right.args[pick[id.right.symbol]]));
    Ok(ok || c.symbols.is_empty())
}

const VAR_NAMES: &[&str] = &["x", "y", "z", "u", "v", "w"];

fn var_name(i: usize) -> String {
    VAR_NAMES.get(i).map_or_else(|| format!("x{i}"), |s| s.to_string())
}

impl fmt::Display for MinorCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |t: &Term| format!("{}({})", self.symbols[t.symbol].name, t.args.iter().map(|&a| var_name(a)).join(","));
        for id in &self.identities {
            writeln!(f, "{} = {}", show(&id.left), show(&id.right))?;
        }
        if self.implicit_symmetry() {
            for &s in &self.totally_symmetric {
                writeln!(f, "{} totally symmetric", self.symbols[s].name)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chains_expand_pairwise() {
        let c = make_condition("Maltsev").unwrap();
        assert_eq!(c.identities.len(), 2);
        assert_eq!(c.symbols.len(), 1);
        assert_eq!(make_condition("HM(2)").unwrap().identities.len(), 3);
        assert_eq!(make_condition("WNU34").unwrap().identities.len(), 6);
        assert_eq!(make_condition("KMM").unwrap().identities.len(), 3);
    }

    #[test]
    fn unused_vars_dropped() {
        let c = make_condition("Maltsev").unwrap();
        assert_eq!(c.identities[0].vars, 2);
        let c = make_condition("J(0)").unwrap();
        assert_eq!(c.identities[0], MinorIdentity {
            vars: 2,
            left: Term { symbol: 0, args: vec![0, 0, 0] },
            right: Term { symbol: 0, args: vec![0, 0, 1] },
        });
    }

    #[test]
    fn bad_names() {
        assert!(matches!(make_condition("NU(2)"), Err(ConditionError::BadParameter(_))));
        assert!(matches!(make_condition("KK(1)"), Err(ConditionError::BadParameter(_))));
        assert!(matches!(make_condition("Frob"), Err(ConditionError::UnknownCondition(_))));
        assert!(make_condition("HM").is_err());
    }

    #[test]
    fn elevator_shape() {
        let c = make_condition("GFS(2)").unwrap();
        assert_eq!(c.to_string(), "f(x,x,y,z) = f(u,y,u,z)\nf(x,y,x,z) = f(x,z,y,x)\n");
    }
}
