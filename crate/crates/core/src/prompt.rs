//! Prompt construction: instruction, graph data, query request.

use serde::{Deserialize, Serialize};

use crate::gen::{serialize_edges_piped, serialize_edges_plain};
use crate::model::{Dialect, LabeledPropertyGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeFormat {
    Plain,
    Piped,
}

/// Everything that differs between the Cypher and Gremlin prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialectProfile {
    pub dialect: Dialect,
    pub operators: Vec<String>,
    pub constraints: Vec<String>,
    pub queries_per_round: usize,
    pub edge_format: EdgeFormat,
    /// Prompts longer than this many characters are rejected instead of truncated.
    pub max_prompt_chars: usize,
}

pub const DEFAULT_MAX_PROMPT_CHARS: usize = 60_000;

const CYPHER_OPERATORS: &[&str] = &[
    "MATCH",
    "OPTIONAL MATCH",
    "WHERE",
    "Aggregation",
    "FOREACH",
    "RETURN",
    "ORDER BY",
    "WITH",
    "UNWIND",
    "UNION",
    "UNION ALL",
    "collect",
    "predicate",
    "coalesce",
    "length",
    "type",
    "keys",
    "labels",
    "startNode",
    "endNode",
    "nodes",
    "relationships",
    "reduce",
    "shortestPath",
];

const GREMLIN_OPERATORS: &[&str] = &[
    "hasLabel()",
    "hasId()",
    "has()",
    "hasNot()",
    "values()",
    "label()",
    "id()",
    "properties()",
    "values()",
    "valueMap()",
    "select()",
    "dedup()",
    "local()",
    "order().by()",
    "where()",
    "filter()",
    "match()",
    "eq()",
    "neq()",
    "gt()",
    "gte()",
    "inside()",
    "outside()",
    "group().by()",
    "groupCount().by()",
    "in()",
    "out()",
    "inE()",
    "outE()",
    "inV()",
    "outV()",
    "both()",
    "path()",
    "repeat().until()",
    "sum()",
    "max()",
    "min()",
    "mean()",
    "contains()",
    "choose()",
    "union()",
    "fold()",
];

const SHARED_CONSTRAINTS: [&str; 4] = [
    "Please make sure the queried data is the node or link mentioned earlier.",
    "Please ensure that the values in the attribute key value pairs of the constraint exist.",
    "If you want to generate a query with relationships, please pay attention to the direction of the query relationships in the generated query statement.",
    "Please ensure that the generated queries use different keywords as much as possible.",
];

fn constraints(ban: &str) -> Vec<String> {
    SHARED_CONSTRAINTS
        .iter()
        .map(|s| (*s).to_owned())
        .chain(std::iter::once(format!(
            "Please ensure that the generated query statement will not change the data of the Graph database(eg. {ban})."
        )))
        .collect()
}

impl DialectProfile {
    pub fn default_for(dialect: Dialect) -> Self {
        match dialect {
            Dialect::Cypher => DialectProfile {
                dialect,
                operators: CYPHER_OPERATORS.iter().map(|s| (*s).into()).collect(),
                constraints: constraints("Do not use the create operators"),
                queries_per_round: 20,
                edge_format: EdgeFormat::Piped,
                max_prompt_chars: DEFAULT_MAX_PROMPT_CHARS,
            },
            Dialect::Gremlin => DialectProfile {
                dialect,
                operators: GREMLIN_OPERATORS.iter().map(|s| (*s).into()).collect(),
                constraints: constraints("Do not use the addV() or addE() operators"),
                queries_per_round: 20,
                edge_format: EdgeFormat::Plain,
                max_prompt_chars: DEFAULT_MAX_PROMPT_CHARS,
            },
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.queries_per_round == 0 {
            return Err(PromptError::InvalidProfile(
                "queries_per_round must be at least 1".into(),
            ));
        }
        if self.operators.is_empty() {
            return Err(PromptError::InvalidProfile(
                "operator list is empty".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("prompt is {len} characters, over the {limit} character limit")]
    TooLong { len: usize, limit: usize },
    #[error("invalid dialect profile: {0}")]
    InvalidProfile(String),
}

/// A rendered prompt, kept in sections so callers can inspect each part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptText {
    pub instruction: String,
    pub data: String,
    pub request: String,
}

impl PromptText {
    pub fn text(&self) -> String {
        format!("{}\n\n{}\n\n{}\n", self.instruction, self.data, self.request)
    }
}

const CYPHER_INSTRUCTION: &str = concat!(
    "Instruction: Your task is to generate queries in the Graph database according to the nodes and relationships in the mentioned graph. ",
    "The edges in the graph are represented as | (: node type {attribute key value pairs})| (: relationship type {attribute key value pairs})| (: node type {attribute key value pairs})|. ",
    "For example, | (: nt8 {p6: false, name: \"u97\"}) | (: et11 {p8: true}) | (: nt6 {p17: false, name: \"u33\"}) | ",
    "Indicates that there exists a directed edge of type et11 from a node named \"u97\" to a node named \"u33\"."
);

const GREMLIN_INSTRUCTION: &str = concat!(
    "Instruction: Your task is to generate queries in the Graph database according to the nodes and relationships in the mentioned graph. ",
    "The edges in the graph are represented as (node type {attribute key value pairs})-(relationship type {attribute key value pairs})->(node type {attribute key value pairs}). ",
    "For example, (nt0 {p5: \"IF\",name: \"u1\"})-(et2 {name: \"e1\",p9: 69.7})->(nt0 {p3: true,name: \"u88\"}) ",
    "Indicates that there exists a directed edge of type et2 from a node named \"u1\" to a node named \"u88\"."
);

/// English number words for the request line ("twenty cypher queries").
pub fn number_word(n: usize) -> String {
    const ONES: [&str; 20] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
        "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen",
        "eighteen", "nineteen",
    ];
    const TENS: [&str; 10] = [
        "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
    ];
    match n {
        0..=19 => ONES[n].to_owned(),
        20..=99 if n % 10 == 0 => TENS[n / 10].to_owned(),
        20..=99 => format!("{}-{}", TENS[n / 10], ONES[n % 10]),
        _ => n.to_string(),
    }
}

pub fn build_prompt(
    g: &LabeledPropertyGraph,
    profile: &DialectProfile,
) -> Result<PromptText, PromptError> {
    profile.validate()?;
    let instruction = match profile.edge_format {
        EdgeFormat::Piped => CYPHER_INSTRUCTION,
        EdgeFormat::Plain => GREMLIN_INSTRUCTION,
    }
    .to_owned();
    let lines = match profile.edge_format {
        EdgeFormat::Piped => serialize_edges_piped(g),
        EdgeFormat::Plain => serialize_edges_plain(g),
    };
    let mut data = format!(
        "The following is the graph data in the Graph database engine, which contains {} nodes and {} edges:",
        g.nodes.len(),
        g.edges.len()
    );
    if !lines.is_empty() {
        data.push('\n');
        data.push_str(&lines);
    }
    let mut request = format!(
        "Based on the instruction and graph database, Please generate {} {} queries with the different operators(eg. {}) and meet the following conditions:",
        number_word(profile.queries_per_round),
        profile.dialect,
        profile.operators.join(", ")
    );
    for (i, c) in profile.constraints.iter().enumerate() {
        request.push_str(&format!("\n{}. {}", i + 1, c));
    }
    let prompt = PromptText {
        instruction,
        data,
        request,
    };
    let len = prompt.text().chars().count();
    if len > profile.max_prompt_chars {
        return Err(PromptError::TooLong {
            len,
            limit: profile.max_prompt_chars,
        });
    }
    Ok(prompt)
}
