use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A search topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicQuery {
    #[serde(rename = "id")]
    pub topic_id: String,
    pub text: String,
}

/// Read topics from `ID<TAB>text` lines, or from a JSON array of
/// `{"id": …, "text": …}` objects. Order is preserved; blank lines are skipped.
pub fn parse_queries<R: Read>(mut reader: R) -> Result<Vec<TopicQuery>> {
    let mut input = String::new();
    reader.read_to_string(&mut input)?;
    let topics = if input.trim_start().starts_with('[') {
        serde_json::from_str::<Vec<TopicQuery>>(&input)?
    } else {
        let mut topics = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (id, text) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected `ID<TAB>text`"))?;
            topics.push(TopicQuery {
                topic_id: id.trim().to_string(),
                text: text.trim().to_string(),
            });
        }
        topics
    };

    let mut seen = HashSet::new();
    for topic in &topics {
        if topic.topic_id.is_empty() || topic.text.is_empty() {
            return Err(Error::param(format!("topic `{}` has an empty id or text", topic.topic_id)));
        }
        if !seen.insert(topic.topic_id.as_str()) {
            return Err(Error::Duplicate {
                kind: "topic",
                id: topic.topic_id.clone(),
            });
        }
    }
    Ok(topics)
}
