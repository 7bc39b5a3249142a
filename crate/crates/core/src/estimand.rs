//! Symbolic estimands over observational probability terms.
//!
//! An estimand is an expression tree whose leaves are conditional
//! probabilities of the observational distribution, possibly with fixed
//! context assignments. `SumOver` binds its variables inside its subtree;
//! a bound variable shadows any outer binding or caller-supplied value of
//! the same name, so sums over already-referenced variables (the `Σ_{x'}`
//! of hand-written formulas) need no renaming.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{Context, Universe, VarId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Estimand {
    /// `P(vars | given, ctx)` read off the observational joint.
    ObsProb {
        vars: Vec<VarId>,
        given: Vec<VarId>,
        ctx: Context,
    },
    /// Finite sum over the full domains of `vars`.
    SumOver { vars: Vec<VarId>, body: Box<Estimand> },
    Product(Vec<Estimand>),
    Quotient {
        num: Box<Estimand>,
        den: Box<Estimand>,
    },
    /// `Σ_c P(c) · child(c)`; the weight is the observational mass of the
    /// context.
    ContextMixture(Vec<(Context, Estimand)>),
    /// Root-only marker: the query has no estimand. Carries a description of
    /// the obstruction.
    NonIdentifiable { witness: String },
}

impl Estimand {
    /// The trivial estimand `P() = 1`.
    pub fn one() -> Estimand {
        Estimand::ObsProb {
            vars: Vec::new(),
            given: Vec::new(),
            ctx: Context::new(),
        }
    }

    pub fn obs_prob(vars: Vec<VarId>, given: Vec<VarId>) -> Estimand {
        Estimand::ObsProb {
            vars,
            given,
            ctx: Context::new(),
        }
    }

    /// `SumOver` with empty binders elided.
    pub fn sum_over(vars: BTreeSet<VarId>, body: Estimand) -> Estimand {
        if vars.is_empty() {
            body
        } else {
            Estimand::SumOver {
                vars: vars.into_iter().collect(),
                body: Box::new(body),
            }
        }
    }

    /// `Product` with singleton flattening; an empty product is `P() = 1`.
    pub fn product(mut children: Vec<Estimand>) -> Estimand {
        match children.len() {
            0 => Estimand::one(),
            1 => children.pop().unwrap(),
            _ => Estimand::Product(children),
        }
    }

    pub fn quotient(num: Estimand, den: Estimand) -> Estimand {
        Estimand::Quotient {
            num: Box::new(num),
            den: Box::new(den),
        }
    }

    pub fn is_non_identifiable(&self) -> bool {
        matches!(self, Estimand::NonIdentifiable { .. })
    }

    /// Variables the expression reads from its environment: everything
    /// referenced minus sum-bound variables and fixed context assignments.
    pub fn free_vars(&self) -> BTreeSet<VarId> {
        match self {
            Estimand::ObsProb { vars, given, .. } => {
                vars.iter().chain(given.iter()).copied().collect()
            }
            Estimand::SumOver { vars, body } => {
                let mut free = body.free_vars();
                for v in vars {
                    free.remove(v);
                }
                free
            }
            Estimand::Product(children) => {
                children.iter().flat_map(|c| c.free_vars()).collect()
            }
            Estimand::Quotient { num, den } => {
                num.free_vars().union(&den.free_vars()).copied().collect()
            }
            Estimand::ContextMixture(arms) => {
                arms.iter().flat_map(|(_, c)| c.free_vars()).collect()
            }
            Estimand::NonIdentifiable { .. } => BTreeSet::new(),
        }
    }

    /// Adds `extra` to the fixed context of every probability term.
    pub fn with_context(&self, extra: &Context) -> Estimand {
        match self {
            Estimand::ObsProb { vars, given, ctx } => Estimand::ObsProb {
                vars: vars.clone(),
                given: given.clone(),
                ctx: ctx.merged_with(extra),
            },
            Estimand::SumOver { vars, body } => Estimand::SumOver {
                vars: vars.clone(),
                body: Box::new(body.with_context(extra)),
            },
            Estimand::Product(children) => {
                Estimand::Product(children.iter().map(|c| c.with_context(extra)).collect())
            }
            Estimand::Quotient { num, den } => Estimand::Quotient {
                num: Box::new(num.with_context(extra)),
                den: Box::new(den.with_context(extra)),
            },
            Estimand::ContextMixture(arms) => Estimand::ContextMixture(
                arms.iter()
                    .map(|(c, e)| (c.clone(), e.with_context(extra)))
                    .collect(),
            ),
            Estimand::NonIdentifiable { witness } => Estimand::NonIdentifiable {
                witness: witness.clone(),
            },
        }
    }
}

/// Output syntax for [`render`].
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum RenderStyle {
    /// Machine-readable s-expressions; round-trips through [`parse_sexpr`].
    Sexpr,
    /// Probability notation for reading.
    Text,
}

/// Deterministic serialization of an estimand.
pub fn render(e: &Estimand, uni: &Universe, style: RenderStyle) -> String {
    match style {
        RenderStyle::Sexpr => render_sexpr(e, uni),
        RenderStyle::Text => render_text(e, uni),
    }
}

fn names(vs: &[VarId], uni: &Universe) -> String {
    let parts: Vec<&str> = vs.iter().map(|&v| uni.name(v)).collect();
    parts.join(" ")
}

fn ctx_sexpr(ctx: &Context, uni: &Universe) -> String {
    let parts: Vec<String> = ctx
        .iter()
        .map(|(v, x)| format!("({} {})", uni.name(v), x))
        .collect();
    parts.join(" ")
}

fn render_sexpr(e: &Estimand, uni: &Universe) -> String {
    match e {
        Estimand::ObsProb { vars, given, ctx } => {
            let mut s = format!("(p ({}) given ({})", names(vars, uni), names(given, uni));
            if !ctx.is_empty() {
                s.push_str(&format!(" ctx ({})", ctx_sexpr(ctx, uni)));
            }
            s.push(')');
            s
        }
        Estimand::SumOver { vars, body } => {
            format!("(sum ({}) {})", names(vars, uni), render_sexpr(body, uni))
        }
        Estimand::Product(children) => {
            let parts: Vec<String> = children.iter().map(|c| render_sexpr(c, uni)).collect();
            format!("(prod {})", parts.join(" "))
        }
        Estimand::Quotient { num, den } => format!(
            "(div {} {})",
            render_sexpr(num, uni),
            render_sexpr(den, uni)
        ),
        Estimand::ContextMixture(arms) => {
            let parts: Vec<String> = arms
                .iter()
                .map(|(ctx, child)| {
                    format!("({} {})", ctx_sexpr(ctx, uni), render_sexpr(child, uni))
                })
                .collect();
            format!("(ctxmix {})", parts.join(" "))
        }
        Estimand::NonIdentifiable { witness } => {
            format!("(non-identifiable {:?})", witness)
        }
    }
}

fn ctx_text(ctx: &Context, uni: &Universe) -> String {
    let parts: Vec<String> = ctx
        .iter()
        .map(|(v, x)| format!("{}={}", uni.name(v), x))
        .collect();
    parts.join(", ")
}

fn render_text(e: &Estimand, uni: &Universe) -> String {
    match e {
        Estimand::ObsProb { vars, given, ctx } => {
            let head: Vec<&str> = vars.iter().map(|&v| uni.name(v)).collect();
            let mut tail: Vec<String> =
                given.iter().map(|&v| uni.name(v).to_string()).collect();
            if !ctx.is_empty() {
                tail.push(ctx_text(ctx, uni));
            }
            if tail.is_empty() {
                format!("P({})", head.join(", "))
            } else {
                format!("P({} | {})", head.join(", "), tail.join(", "))
            }
        }
        Estimand::SumOver { vars, body } => {
            let bound: Vec<&str> = vars.iter().map(|&v| uni.name(v)).collect();
            format!("Σ_{{{}}} {}", bound.join(","), render_text_factor(body, uni))
        }
        Estimand::Product(children) => {
            let parts: Vec<String> = children
                .iter()
                .map(|c| render_text_factor(c, uni))
                .collect();
            parts.join(" ")
        }
        Estimand::Quotient { num, den } => format!(
            "[{} / {}]",
            render_text(num, uni),
            render_text(den, uni)
        ),
        Estimand::ContextMixture(arms) => {
            let parts: Vec<String> = arms
                .iter()
                .map(|(ctx, child)| {
                    format!(
                        "P({}) · [{}]",
                        ctx_text(ctx, uni),
                        render_text(child, uni)
                    )
                })
                .collect();
            parts.join(" + ")
        }
        Estimand::NonIdentifiable { witness } => format!("NON-IDENTIFIABLE: {witness}"),
    }
}

fn render_text_factor(e: &Estimand, uni: &Universe) -> String {
    match e {
        Estimand::ObsProb { .. } | Estimand::Quotient { .. } => render_text(e, uni),
        _ => format!("({})", render_text(e, uni)),
    }
}

// ── s-expression parsing ────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
enum Sexpr {
    Atom(String),
    List(Vec<Sexpr>),
}

fn tokenize(input: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' | ')' => {
                tokens.push(c.to_string());
                chars.next();
            }
            '"' => {
                chars.next();
                let mut s = String::from("\"");
                let mut closed = false;
                while let Some(c) = chars.next() {
                    if c == '\\' {
                        match chars.next() {
                            Some(esc) => s.push(esc),
                            None => break,
                        }
                    } else if c == '"' {
                        closed = true;
                        break;
                    } else {
                        s.push(c);
                    }
                }
                if !closed {
                    return Err(Error::Parse {
                        line: 1,
                        msg: "unterminated string literal".into(),
                    });
                }
                tokens.push(s);
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c == '(' || c == ')' || c == '"' || c.is_whitespace() {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                tokens.push(s);
            }
        }
    }
    Ok(tokens)
}

fn parse_tokens(tokens: &[String], pos: &mut usize) -> Result<Sexpr> {
    let err = |msg: &str| Error::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    if *pos >= tokens.len() {
        return Err(err("unexpected end of input"));
    }
    let tok = &tokens[*pos];
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                if *pos >= tokens.len() {
                    return Err(err("unbalanced parentheses"));
                }
                if tokens[*pos] == ")" {
                    *pos += 1;
                    return Ok(Sexpr::List(items));
                }
                items.push(parse_tokens(tokens, pos)?);
            }
        }
        ")" => Err(err("unexpected `)`")),
        _ => Ok(Sexpr::Atom(tok.clone())),
    }
}

fn atom(s: &Sexpr) -> Result<&str> {
    match s {
        Sexpr::Atom(a) => Ok(a),
        Sexpr::List(_) => Err(Error::Parse {
            line: 1,
            msg: "expected an atom".into(),
        }),
    }
}

fn var_list(s: &Sexpr, uni: &Universe) -> Result<Vec<VarId>> {
    let Sexpr::List(items) = s else {
        return Err(Error::Parse {
            line: 1,
            msg: "expected a variable list".into(),
        });
    };
    items.iter().map(|i| uni.lookup(atom(i)?)).collect()
}

/// A binding is a two-element list `(<name> <value>)`.
fn binding(s: &Sexpr, uni: &Universe) -> Result<(VarId, usize)> {
    let Sexpr::List(items) = s else {
        return Err(Error::Parse {
            line: 1,
            msg: "expected a `(name value)` binding".into(),
        });
    };
    if items.len() != 2 {
        return Err(Error::Parse {
            line: 1,
            msg: "binding must have exactly a name and a value".into(),
        });
    }
    let v = uni.lookup(atom(&items[0])?)?;
    let value: usize = atom(&items[1])?.parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("invalid value in binding for `{}`", uni.name(v)),
    })?;
    if value >= uni.domain_size(v) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("value {value} out of domain for `{}`", uni.name(v)),
        });
    }
    Ok((v, value))
}

fn context_of(items: &[Sexpr], uni: &Universe) -> Result<Context> {
    let mut ctx = Context::new();
    for item in items {
        let (v, x) = binding(item, uni)?;
        ctx.insert(v, x);
    }
    Ok(ctx)
}

fn build(s: &Sexpr, uni: &Universe) -> Result<Estimand> {
    let parse_err = |msg: String| Error::Parse { line: 1, msg };
    let Sexpr::List(items) = s else {
        return Err(parse_err("expected a list expression".into()));
    };
    if items.is_empty() {
        return Err(parse_err("empty expression".into()));
    }
    match atom(&items[0])? {
        "p" => {
            if items.len() < 4 || atom(&items[2])? != "given" {
                return Err(parse_err(
                    "expected `(p (<vars>) given (<vars>) [ctx (<bindings>)])`".into(),
                ));
            }
            let vars = var_list(&items[1], uni)?;
            let given = var_list(&items[3], uni)?;
            let ctx = match items.len() {
                4 => Context::new(),
                6 if atom(&items[4])? == "ctx" => {
                    let Sexpr::List(bindings) = &items[5] else {
                        return Err(parse_err("expected a binding list after `ctx`".into()));
                    };
                    context_of(bindings, uni)?
                }
                _ => return Err(parse_err("malformed probability term".into())),
            };
            Ok(Estimand::ObsProb { vars, given, ctx })
        }
        "sum" => {
            if items.len() != 3 {
                return Err(parse_err("expected `(sum (<vars>) <expr>)`".into()));
            }
            let vars = var_list(&items[1], uni)?;
            let body = build(&items[2], uni)?;
            Ok(Estimand::sum_over(vars.into_iter().collect(), body))
        }
        "prod" => {
            let children: Result<Vec<Estimand>> =
                items[1..].iter().map(|i| build(i, uni)).collect();
            Ok(Estimand::product(children?))
        }
        "div" => {
            if items.len() != 3 {
                return Err(parse_err("expected `(div <num> <den>)`".into()));
            }
            Ok(Estimand::quotient(
                build(&items[1], uni)?,
                build(&items[2], uni)?,
            ))
        }
        "ctxmix" => {
            let mut arms = Vec::new();
            for arm in &items[1..] {
                let Sexpr::List(parts) = arm else {
                    return Err(parse_err("expected `(<bindings...> <expr>)` arm".into()));
                };
                if parts.is_empty() {
                    return Err(parse_err("empty mixture arm".into()));
                }
                let (bindings, expr) = parts.split_at(parts.len() - 1);
                let ctx = context_of(bindings, uni)?;
                arms.push((ctx, build(&expr[0], uni)?));
            }
            Ok(Estimand::ContextMixture(arms))
        }
        "non-identifiable" => {
            let witness = if items.len() > 1 {
                atom(&items[1])?.trim_start_matches('"').to_string()
            } else {
                String::new()
            };
            Ok(Estimand::NonIdentifiable { witness })
        }
        other => Err(parse_err(format!("unknown expression head `{other}`"))),
    }
}

fn contains_non_identifiable(e: &Estimand) -> bool {
    match e {
        Estimand::NonIdentifiable { .. } => true,
        Estimand::ObsProb { .. } => false,
        Estimand::SumOver { body, .. } => contains_non_identifiable(body),
        Estimand::Product(children) => children.iter().any(contains_non_identifiable),
        Estimand::Quotient { num, den } => {
            contains_non_identifiable(num) || contains_non_identifiable(den)
        }
        Estimand::ContextMixture(arms) => {
            arms.iter().any(|(_, c)| contains_non_identifiable(c))
        }
    }
}

/// Parses the s-expression estimand grammar against a variable table.
/// A `non-identifiable` marker is only legal as the root expression.
pub fn parse_sexpr(input: &str, uni: &Arc<Universe>) -> Result<Estimand> {
    let tokens = tokenize(input)?;
    let mut pos = 0;
    let sexpr = parse_tokens(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(Error::Parse {
            line: 1,
            msg: "trailing tokens after expression".into(),
        });
    }
    let e = build(&sexpr, uni)?;
    if !e.is_non_identifiable() && contains_non_identifiable(&e) {
        return Err(Error::Parse {
            line: 1,
            msg: "non-identifiable marker must be the root expression".into(),
        });
    }
    Ok(e)
}
