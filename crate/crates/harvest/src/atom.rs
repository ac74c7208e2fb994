//! Minimal Atom feed parser covering the subset the metadata service emits:
//! `<entry>` elements with id, title, summary, timestamps, and `<category
//! term="..."/>` attributes, plus the total-results counter.
//!
//! Hand-rolled on purpose: the build avoids a full XML dependency and the
//! feed grammar here is small and fixed. Anything outside that grammar is
//! a parse failure, which the harvester surfaces with its page token.

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AtomEntry {
    pub id: String,
    pub title: String,
    pub summary: String,
    pub published: String,
    pub updated: String,
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct AtomFeed {
    pub total_results: Option<u64>,
    pub entries: Vec<AtomEntry>,
}

#[derive(Debug)]
enum Event<'a> {
    Start { name: &'a str, attrs: &'a str },
    Empty { name: &'a str, attrs: &'a str },
    End { name: &'a str },
    Text(&'a str),
}

fn unescape(text: &str) -> Result<String, String> {
    if !text.contains('&') {
        return Ok(text.to_owned());
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let end = rest.find(';').ok_or("unterminated entity")?;
        let entity = &rest[1..end];
        match entity {
            "amp" => out.push('&'),
            "lt" => out.push('<'),
            "gt" => out.push('>'),
            "quot" => out.push('"'),
            "apos" => out.push('\''),
            _ => {
                let code = if let Some(hex) = entity.strip_prefix("#x") {
                    u32::from_str_radix(hex, 16).map_err(|_| "bad numeric entity")?
                } else if let Some(dec) = entity.strip_prefix('#') {
                    dec.parse::<u32>().map_err(|_| "bad numeric entity")?
                } else {
                    return Err(format!("unknown entity &{entity};"));
                };
                out.push(char::from_u32(code).ok_or("entity is not a character")?);
            }
        }
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Split a tag body like `category term="cs.LG" scheme=".."` into name and
/// raw attribute text.
fn split_tag(body: &str) -> (&str, &str) {
    match body.find(|c: char| c.is_whitespace()) {
        Some(pos) => (&body[..pos], body[pos..].trim()),
        None => (body, ""),
    }
}

/// Value of one attribute inside raw attribute text.
fn attr_value<'a>(attrs: &'a str, name: &str) -> Option<&'a str> {
    let mut rest = attrs;
    while let Some(pos) = rest.find(name) {
        let after = &rest[pos + name.len()..];
        // Must be a standalone attribute name followed by `=`.
        let preceded_ok = pos == 0 || rest[..pos].ends_with(|c: char| c.is_whitespace());
        let after_eq = after.trim_start();
        if preceded_ok && after_eq.starts_with('=') {
            let value = after_eq[1..].trim_start();
            let quote = value.chars().next()?;
            if quote == '"' || quote == '\'' {
                let inner = &value[1..];
                if let Some(end) = inner.find(quote) {
                    return Some(&inner[..end]);
                }
            }
            return None;
        }
        rest = &rest[pos + name.len()..];
    }
    None
}

/// Local name with any namespace prefix removed.
fn local_name(name: &str) -> &str {
    name.rsplit(':').next().unwrap_or(name)
}

struct Scanner<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(input: &'a str) -> Scanner<'a> {
        Scanner { input, pos: 0 }
    }

    fn next_event(&mut self) -> Result<Option<Event<'a>>, String> {
        let rest = &self.input[self.pos..];
        if rest.is_empty() {
            return Ok(None);
        }
        if let Some(stripped) = rest.strip_prefix('<') {
            if stripped.starts_with("!--") {
                let end = rest.find("-->").ok_or("unterminated comment")?;
                self.pos += end + 3;
                return self.next_event();
            }
            if stripped.starts_with('?') {
                let end = rest.find("?>").ok_or("unterminated declaration")?;
                self.pos += end + 2;
                return self.next_event();
            }
            let end = rest.find('>').ok_or("unterminated tag")?;
            let body = &rest[1..end];
            self.pos += end + 1;
            if let Some(name) = body.strip_prefix('/') {
                return Ok(Some(Event::End { name: name.trim() }));
            }
            if let Some(body) = body.strip_suffix('/') {
                let (name, attrs) = split_tag(body.trim());
                return Ok(Some(Event::Empty { name, attrs }));
            }
            let (name, attrs) = split_tag(body.trim());
            if name.is_empty() {
                return Err("empty tag name".into());
            }
            return Ok(Some(Event::Start { name, attrs }));
        }
        let end = rest.find('<').unwrap_or(rest.len());
        let text = &rest[..end];
        self.pos += end;
        Ok(Some(Event::Text(text)))
    }
}

/// Parse a feed page. Errors describe the first malformed construct.
pub fn parse_feed(xml: &str) -> Result<AtomFeed, String> {
    let mut scanner = Scanner::new(xml);
    let mut feed = AtomFeed::default();
    let mut stack: Vec<&str> = Vec::new();
    let mut entry: Option<AtomEntry> = None;
    let mut text = String::new();

    while let Some(event) = scanner.next_event()? {
        match event {
            Event::Start { name, .. } => {
                stack.push(name);
                text.clear();
                if local_name(name) == "entry" {
                    if entry.is_some() {
                        return Err("nested <entry>".into());
                    }
                    entry = Some(AtomEntry::default());
                }
            }
            Event::Empty { name, attrs } => {
                if let Some(current) = entry.as_mut() {
                    let local = local_name(name);
                    if local == "category" || local == "primary_category" {
                        if let Some(term) = attr_value(attrs, "term") {
                            let term = unescape(term)?;
                            if local == "category" {
                                current.categories.push(term);
                            }
                        }
                    }
                }
            }
            Event::End { name } => {
                let open = stack.pop().ok_or_else(|| format!("unopened </{name}>"))?;
                if open != name {
                    return Err(format!("mismatched </{name}>, expected </{open}>"));
                }
                let content = unescape(text.trim())?;
                text.clear();
                match (entry.as_mut(), local_name(name)) {
                    (Some(current), "id") => current.id = content,
                    (Some(current), "title") => current.title = content,
                    (Some(current), "summary") => current.summary = content,
                    (Some(current), "published") => current.published = content,
                    (Some(current), "updated") => current.updated = content,
                    (_, "totalResults") => {
                        feed.total_results =
                            Some(content.parse().map_err(|_| "bad totalResults")?);
                    }
                    (_, "entry") => {
                        feed.entries.push(entry.take().ok_or("unopened </entry>")?);
                    }
                    _ => {}
                }
            }
            Event::Text(t) => text.push_str(t),
        }
    }
    if !stack.is_empty() {
        return Err(format!("unclosed <{}>", stack.last().unwrap()));
    }
    Ok(feed)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAGE: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<feed xmlns="http://www.w3.org/2005/Atom">
  <title>query results</title>
  <opensearch:totalResults xmlns:opensearch="http://a9.com/-/spec/opensearch/1.1/">2</opensearch:totalResults>
  <entry>
    <id>http://arxiv.org/abs/2401.00001v1</id>
    <updated>2024-01-03T00:00:00Z</updated>
    <published>2024-01-02T00:00:00Z</published>
    <title>Graphs &amp; Kernels</title>
    <summary>A summary with &lt;math&gt;.</summary>
    <category term="cs.LG" scheme="http://arxiv.org/schemas/atom"/>
    <category term="stat.ML" scheme="http://arxiv.org/schemas/atom"/>
    <arxiv:primary_category xmlns:arxiv="http://arxiv.org/schemas/atom" term="cs.LG"/>
  </entry>
  <entry>
    <id>http://arxiv.org/abs/2401.00002v2</id>
    <updated>2024-01-05T00:00:00Z</updated>
    <published>2024-01-04T00:00:00Z</published>
    <title>Second Entry</title>
    <summary>Plain.</summary>
    <category term="math.CO"/>
  </entry>
</feed>"#;

    #[test]
    fn parses_entries_and_total() {
        let feed = parse_feed(PAGE).unwrap();
        assert_eq!(feed.total_results, Some(2));
        assert_eq!(feed.entries.len(), 2);
        let first = &feed.entries[0];
        assert_eq!(first.id, "http://arxiv.org/abs/2401.00001v1");
        assert_eq!(first.title, "Graphs & Kernels");
        assert_eq!(first.summary, "A summary with <math>.");
        assert_eq!(first.categories, vec!["cs.LG", "stat.ML"]);
        assert_eq!(first.published, "2024-01-02T00:00:00Z");
    }

    #[test]
    fn mismatched_tags_fail() {
        let bad = "<feed><entry><id>x</title></entry></feed>";
        assert!(parse_feed(bad).is_err());
    }

    #[test]
    fn truncated_documents_fail() {
        assert!(parse_feed("<feed><entry><id>x</id>").is_err());
        assert!(parse_feed("<feed><entry attr=").is_err());
    }

    #[test]
    fn numeric_and_unknown_entities() {
        let feed = parse_feed(
            "<feed><entry><title>caf&#233; &#x41;</title></entry></feed>",
        )
        .unwrap();
        assert_eq!(feed.entries[0].title, "café A");
        assert!(parse_feed("<feed><entry><title>&bogus;</title></entry></feed>").is_err());
    }

    #[test]
    fn empty_feed_is_fine() {
        let feed = parse_feed("<feed><opensearch:totalResults>0</opensearch:totalResults></feed>")
            .unwrap();
        assert_eq!(feed.total_results, Some(0));
        assert!(feed.entries.is_empty());
    }
}
