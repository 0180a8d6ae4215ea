//! Line-oriented netlist front end.
//!
//! ```text
//! * comment
//! M<name> <d> <g> <s> <bg> <model> W=<val> L=<val>
//! V<name> <n+> <n-> DC <val>
//! .model <name> nfet|pfet vt0= kprime= n= lambda0= chi= gamma= kf= cox= [vclm=] [dvt=]
//! .op
//! .dc <source> <start> <stop> <points>
//! .end
//! ```
//!
//! Keywords and node names are case-insensitive. Lengths are in meters.

use super::numbers::{format_number, parse_scaled};
use crate::cards;
use crate::device::{ModelCard, Polarity};
use crate::error::{Error, Result, Span};
use indexmap::IndexMap;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceCard {
    pub name: String,
    pub drain: String,
    pub gate: String,
    pub source: String,
    pub backgate: String,
    pub model: String,
    /// Geometry in micrometers, converted exactly from the meter literal.
    pub width_um: f64,
    pub length_um: f64,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceCard {
    pub name: String,
    pub pos: String,
    pub neg: String,
    pub value: f64,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDef {
    pub name: String,
    pub card: ModelCard,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Op,
    Dc {
        source: String,
        start: f64,
        stop: f64,
        points: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Warning {
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Netlist {
    pub devices: Vec<DeviceCard>,
    /// Keyed by lower-case model name.
    pub models: IndexMap<String, ModelDef>,
    pub sources: Vec<SourceCard>,
    pub directives: Vec<Directive>,
    pub warnings: Vec<Warning>,
}

impl Netlist {
    /// Copy with positions and warnings removed, for structural comparison.
    pub fn without_spans(&self) -> Netlist {
        let mut n = self.clone();
        n.warnings.clear();
        for d in &mut n.devices {
            d.span = Span::default();
        }
        for s in &mut n.sources {
            s.span = Span::default();
        }
        for m in n.models.values_mut() {
            m.span = Span::default();
        }
        n
    }

    pub fn same_structure(&self, other: &Netlist) -> bool {
        self.without_spans() == other.without_spans()
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut column = 0;
    for (byte, ch) in line.char_indices() {
        column += 1;
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push(Token {
                    text: &line[b..byte],
                    column: c,
                });
            }
        } else if start.is_none() {
            start = Some((byte, column));
        }
    }
    if let Some((b, c)) = start {
        out.push(Token {
            text: &line[b..],
            column: c,
        });
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>, expected: &[&'static str]) -> Error {
    Error::Syntax {
        span: Span { line, column },
        message: message.into(),
        expected: expected.to_vec(),
    }
}

struct LineCtx<'a> {
    line: usize,
    end_column: usize,
    tokens: Vec<Token<'a>>,
}

impl<'a> LineCtx<'a> {
    fn span(&self) -> Span {
        Span {
            line: self.line,
            column: self.tokens.first().map_or(1, |t| t.column),
        }
    }

    fn missing(&self, what: &'static str) -> Error {
        syntax(self.line, self.end_column, format!("missing {what}"), &[what])
    }

    fn at(&self, i: usize, message: impl Into<String>, expected: &[&'static str]) -> Error {
        let column = self.tokens.get(i).map_or(self.end_column, |t| t.column);
        syntax(self.line, column, message, expected)
    }
}

fn is_param(text: &str) -> bool {
    text.contains('=')
}

fn split_param(text: &str) -> (&str, &str) {
    match text.split_once('=') {
        Some((k, v)) => (k, v),
        None => (text, ""),
    }
}

fn node_name(ctx: &LineCtx<'_>, i: usize, what: &'static str) -> Result<String> {
    let tok = ctx.tokens.get(i).ok_or_else(|| ctx.missing(what))?;
    if is_param(tok.text) {
        return Err(ctx.at(i, format!("expected {what}, found parameter '{}'", tok.text), &[what]));
    }
    Ok(tok.text.to_ascii_lowercase())
}

fn parse_device(ctx: &LineCtx<'_>) -> Result<DeviceCard> {
    const SLOTS: [&str; 5] = ["drain node", "gate node", "source node", "back-gate node", "model name"];
    let positional = ctx.tokens.iter().take_while(|t| !is_param(t.text)).count();
    let has_params = positional < ctx.tokens.len();
    if positional == 5 && has_params {
        return Err(ctx.at(
            5,
            "4-terminal MOSFET card; a back-gate node is required between source and model",
            &["back-gate node"],
        ));
    }
    let mut fields = Vec::with_capacity(5);
    for (k, what) in SLOTS.iter().enumerate() {
        fields.push(node_name(ctx, k + 1, what)?);
    }
    if positional > 6 {
        return Err(ctx.at(6, format!("unexpected token '{}'", ctx.tokens[6].text), &["W=", "L="]));
    }
    let mut width = None;
    let mut length = None;
    for i in positional..ctx.tokens.len() {
        let tok = &ctx.tokens[i];
        if !is_param(tok.text) {
            return Err(ctx.at(i, format!("unexpected token '{}'", tok.text), &["W=", "L="]));
        }
        let (k, v) = split_param(tok.text);
        let slot = match k.to_ascii_lowercase().as_str() {
            "w" => &mut width,
            "l" => &mut length,
            _ => return Err(ctx.at(i, format!("unknown instance parameter '{k}'"), &["W=", "L="])),
        };
        if slot.is_some() {
            return Err(ctx.at(i, format!("duplicate parameter '{k}'"), &["W=", "L="]));
        }
        match parse_scaled(v, 6) {
            Some(um) if um > 0.0 && um.is_finite() => *slot = Some(um),
            _ => return Err(ctx.at(i, format!("invalid {} value '{v}'", k.to_ascii_uppercase()), &["positive number"])),
        }
    }
    let width_um = width.ok_or_else(|| ctx.missing("W="))?;
    let length_um = length.ok_or_else(|| ctx.missing("L="))?;
    let mut it = fields.into_iter();
    let mut next = || it.next().unwrap_or_default();
    Ok(DeviceCard {
        name: ctx.tokens[0].text.to_string(),
        drain: next(),
        gate: next(),
        source: next(),
        backgate: next(),
        model: next(),
        width_um,
        length_um,
        span: ctx.span(),
    })
}

fn parse_source(ctx: &LineCtx<'_>) -> Result<SourceCard> {
    let pos = node_name(ctx, 1, "positive node")?;
    let neg = node_name(ctx, 2, "negative node")?;
    let mut i = 3;
    match ctx.tokens.get(i) {
        None => return Err(ctx.missing("DC")),
        Some(t) if t.text.eq_ignore_ascii_case("dc") => i += 1,
        Some(_) => {}
    }
    let tok = ctx.tokens.get(i).ok_or_else(|| ctx.missing("value"))?;
    let value = parse_scaled(tok.text, 0)
        .filter(|v| v.is_finite())
        .ok_or_else(|| ctx.at(i, format!("invalid source value '{}'", tok.text), &["number"]))?;
    if ctx.tokens.len() > i + 1 {
        return Err(ctx.at(i + 1, format!("unexpected token '{}'", ctx.tokens[i + 1].text), &["end of line"]));
    }
    Ok(SourceCard {
        name: ctx.tokens[0].text.to_string(),
        pos,
        neg,
        value,
        span: ctx.span(),
    })
}

const MODEL_KEYS: [&str; 10] = ["vt0", "kprime", "n", "lambda0", "chi", "gamma", "kf", "cox", "vclm", "dvt"];

fn parse_model(ctx: &LineCtx<'_>) -> Result<ModelDef> {
    let name = node_name(ctx, 1, "model name")?;
    let kind = ctx.tokens.get(2).ok_or_else(|| ctx.missing("nfet | pfet"))?;
    let mut card = match kind.text.to_ascii_lowercase().as_str() {
        "nfet" | "nmos" => cards::nfet(),
        "pfet" | "pmos" => cards::pfet(),
        other => return Err(ctx.at(2, format!("unknown model type '{other}'"), &["nfet", "pfet"])),
    };
    let mut seen = [false; MODEL_KEYS.len()];
    for i in 3..ctx.tokens.len() {
        let tok = &ctx.tokens[i];
        if !is_param(tok.text) {
            return Err(ctx.at(i, format!("expected key=value, found '{}'", tok.text), &MODEL_KEYS));
        }
        let (k, v) = split_param(tok.text);
        let key = k.to_ascii_lowercase();
        let slot = MODEL_KEYS
            .iter()
            .position(|m| *m == key)
            .ok_or_else(|| ctx.at(i, format!("unknown model parameter '{k}'"), &MODEL_KEYS))?;
        if seen[slot] {
            return Err(ctx.at(i, format!("duplicate model parameter '{k}'"), &MODEL_KEYS));
        }
        seen[slot] = true;
        let value = parse_scaled(v, 0).ok_or_else(|| ctx.at(i, format!("invalid value '{v}' for {k}"), &["number"]))?;
        if !value.is_finite() && key != "vclm" {
            return Err(ctx.at(i, format!("{k} must be finite"), &["number"]));
        }
        let field = match key.as_str() {
            "vt0" => &mut card.vt0,
            "kprime" => &mut card.kprime,
            "n" => &mut card.n_slope,
            "lambda0" => &mut card.lambda0,
            "chi" => &mut card.chi_mag,
            "gamma" => &mut card.gamma_noise,
            "kf" => &mut card.k_flicker,
            "cox" => &mut card.cox_area,
            "vclm" => &mut card.vclm,
            _ => &mut card.dvt,
        };
        *field = value;
    }
    card.validate()
        .map_err(|e| syntax(ctx.line, ctx.span().column, format!("invalid model card: {e}"), &["valid parameter set"]))?;
    Ok(ModelDef {
        name,
        card,
        span: ctx.span(),
    })
}

fn parse_dc(ctx: &LineCtx<'_>) -> Result<Directive> {
    let source = node_name(ctx, 1, "source name")?;
    let mut nums = [0.0; 3];
    for (k, what) in ["start", "stop", "points"].iter().enumerate() {
        let tok = ctx.tokens.get(k + 2).ok_or_else(|| ctx.missing(what))?;
        nums[k] = parse_scaled(tok.text, 0)
            .filter(|v| v.is_finite())
            .ok_or_else(|| ctx.at(k + 2, format!("invalid {what} '{}'", tok.text), &["number"]))?;
    }
    let points = nums[2];
    if points < 2.0 || points.fract() != 0.0 || points > 1e7 {
        return Err(ctx.at(4, "point count must be an integer >= 2", &["integer >= 2"]));
    }
    if ctx.tokens.len() > 5 {
        return Err(ctx.at(5, format!("unexpected token '{}'", ctx.tokens[5].text), &["end of line"]));
    }
    Ok(Directive::Dc {
        source,
        start: nums[0],
        stop: nums[1],
        points: points as usize,
    })
}

/// Parses netlist text. Dangling nodes are reported in `warnings`.
pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let mut net = Netlist::default();
    let mut names: HashMap<String, Span> = HashMap::new();
    let mut dc_sources: Vec<(String, Span)> = Vec::new();
    let mut ended = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens = tokenize(raw);
        let Some(first) = tokens.first() else { continue };
        if first.text.starts_with('*') {
            continue;
        }
        let ctx = LineCtx {
            line,
            end_column: raw.chars().count() + 1,
            tokens,
        };
        if ended {
            net.warnings.push(Warning {
                span: ctx.span(),
                message: "text after .end ignored".into(),
            });
            break;
        }
        let head = ctx.tokens[0].text;
        let lower = head.to_ascii_lowercase();
        if let Some(directive) = lower.strip_prefix('.') {
            match directive {
                "model" => {
                    let m = parse_model(&ctx)?;
                    if net.models.contains_key(&m.name) {
                        return Err(ctx.at(1, format!("model '{}' redefined", m.name), &["new model name"]));
                    }
                    net.models.insert(m.name.clone(), m);
                }
                "op" => {
                    if ctx.tokens.len() > 1 {
                        return Err(ctx.at(1, "unexpected token after .op", &["end of line"]));
                    }
                    net.directives.push(Directive::Op);
                }
                "dc" => {
                    let d = parse_dc(&ctx)?;
                    if let Directive::Dc { source, .. } = &d {
                        let column = ctx.tokens[1].column;
                        dc_sources.push((source.clone(), Span { line, column }));
                    }
                    net.directives.push(d);
                }
                "end" => ended = true,
                _ => {
                    return Err(ctx.at(0, format!("unknown directive '{head}'"), &[".model", ".op", ".dc", ".end"]));
                }
            }
            continue;
        }
        let kind = lower.chars().next().unwrap_or(' ');
        if !matches!(kind, 'm' | 'v') {
            return Err(ctx.at(0, format!("unsupported element '{head}'"), &["M<name>", "V<name>", ".model", ".end"]));
        }
        if lower.len() < 2 {
            return Err(ctx.at(0, "element name needs a suffix", &["M<name>", "V<name>"]));
        }
        if let Some(prev) = names.get(&lower) {
            return Err(ctx.at(0, format!("duplicate element '{head}' (first defined at {prev})"), &["unique name"]));
        }
        names.insert(lower, ctx.span());
        match kind {
            'm' => net.devices.push(parse_device(&ctx)?),
            _ => net.sources.push(parse_source(&ctx)?),
        }
    }

    for d in &net.devices {
        if !net.models.contains_key(&d.model) {
            return Err(Error::UndefinedModel {
                model: d.model.clone(),
                span: d.span,
            });
        }
    }
    for (source, span) in dc_sources {
        if !net.sources.iter().any(|s| s.name.eq_ignore_ascii_case(&source)) {
            return Err(syntax(span.line, span.column, format!(".dc refers to unknown source '{source}'"), &["V<name>"]));
        }
    }
    net.warnings.extend(dangling_nodes(&net));
    Ok(net)
}

fn dangling_nodes(net: &Netlist) -> Vec<Warning> {
    let mut count: IndexMap<&str, (usize, Span)> = IndexMap::new();
    let terminals = net
        .devices
        .iter()
        .flat_map(|d| [&d.drain, &d.gate, &d.source, &d.backgate].map(|n| (n, d.span)))
        .chain(net.sources.iter().flat_map(|s| [(&s.pos, s.span), (&s.neg, s.span)]));
    for (n, span) in terminals {
        let node = if n == "gnd" { "0" } else { n.as_str() };
        count.entry(node).or_insert((0, span)).0 += 1;
    }
    count
        .into_iter()
        .filter(|(n, (c, _))| *c == 1 && *n != "0")
        .map(|(n, (_, span))| Warning {
            span,
            message: format!("node '{n}' has a single connection"),
        })
        .collect()
}

fn emit_model(out: &mut String, m: &ModelDef) {
    let c = &m.card;
    let kind = match c.polarity {
        Polarity::N => "nfet",
        Polarity::P => "pfet",
    };
    let values = [
        c.vt0,
        c.kprime,
        c.n_slope,
        c.lambda0,
        c.chi_mag,
        c.gamma_noise,
        c.k_flicker,
        c.cox_area,
        c.vclm,
        c.dvt,
    ];
    out.push_str(&format!(".model {} {kind}", m.name));
    for (k, v) in MODEL_KEYS.iter().zip(values) {
        out.push_str(&format!(" {k}={}", format_number(v)));
    }
    out.push('\n');
}

fn um_literal(v: f64) -> String {
    format!("{}u", format_number(v))
}

/// Writes a netlist in canonical form; the output reparses to the same structure.
pub fn emit_netlist(net: &Netlist) -> String {
    let mut out = String::from("* bgamp netlist\n");
    for m in net.models.values() {
        emit_model(&mut out, m);
    }
    for d in &net.devices {
        out.push_str(&format!(
            "{} {} {} {} {} {} W={} L={}\n",
            d.name,
            d.drain,
            d.gate,
            d.source,
            d.backgate,
            d.model,
            um_literal(d.width_um),
            um_literal(d.length_um)
        ));
    }
    for s in &net.sources {
        out.push_str(&format!("{} {} {} DC {}\n", s.name, s.pos, s.neg, format_number(s.value)));
    }
    for dir in &net.directives {
        match dir {
            Directive::Op => out.push_str(".op\n"),
            Directive::Dc {
                source,
                start,
                stop,
                points,
            } => out.push_str(&format!(
                ".dc {source} {} {} {points}\n",
                format_number(*start),
                format_number(*stop)
            )),
        }
    }
    out.push_str(".end\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const INVERTER: &str = "\
* complementary stage
.model nmod nfet vt0=0.45 kprime=300u n=1.3 lambda0=0.02 chi=0.2 gamma=0.8 kf=1e-25 cox=8.6m
.model pmod pfet vt0=0.45 kprime=300u n=1.3 lambda0=0.02 chi=0.2 gamma=0.8 kf=1e-25 cox=8.6m
M1 out in 0 out nmod W=2u L=0.15u
M2 out in vdd out pmod W=2u L=0.15u
VDD vdd 0 DC 1.8
VIN in 0 DC 0.9
.op
.end
";

    #[test]
    fn parses_inverter() {
        let n = parse_netlist(INVERTER).unwrap();
        assert_eq!(n.devices.len(), 2);
        assert_eq!(n.devices[0].backgate, "out");
        assert_eq!(n.devices[0].drain, "out");
        assert_eq!(n.devices[0].length_um, 0.15);
        assert_eq!(n.models["nmod"].card.chi_mag, 0.2);
        assert_eq!(n.sources[1].value, 0.9);
        assert!(n.warnings.is_empty(), "{:?}", n.warnings);
    }

    #[test]
    fn missing_fields_point_past_end() {
        let e = parse_netlist("M1 out in 0").unwrap_err();
        assert_eq!(e.span(), Some(Span { line: 1, column: 12 }));
    }

    #[test]
    fn four_terminal_card_rejected() {
        let text = ".model nmod nfet\nM1 out in 0 nmod W=1u L=1u\n";
        match parse_netlist(text).unwrap_err() {
            Error::Syntax { span, message, .. } => {
                assert_eq!(span.line, 2);
                assert_eq!(span.column, 18);
                assert!(message.contains("4-terminal"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn undefined_model() {
        let e = parse_netlist("M1 a b 0 0 nope W=1u L=1u\nV1 b 0 DC 1\n").unwrap_err();
        assert!(matches!(e, Error::UndefinedModel { ref model, .. } if model == "nope"));
        assert_eq!(e.span().unwrap().line, 1);
    }

    #[test]
    fn dangling_node_warns() {
        let n = parse_netlist(".model nmod nfet\nM1 a b 0 0 nmod W=1u L=1u\nV1 b 0 DC 1\n").unwrap();
        assert_eq!(n.warnings.len(), 1);
        assert!(n.warnings[0].message.contains("'a'"));
    }

    #[test]
    fn round_trip() {
        let n = parse_netlist(INVERTER).unwrap();
        let again = parse_netlist(&emit_netlist(&n)).unwrap();
        assert!(n.same_structure(&again));
    }
}
