use crate::error::{Error, Result};

pub(crate) fn parse_header(line: &str, tag: &str) -> Result<Vec<(String, String)>> {
    let rest = line
        .strip_prefix(tag)
        .ok_or_else(|| Error::Parse(format!("expected header starting with `{tag}`")))?;
    rest.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse(format!("malformed header field `{kv}`")))
        })
        .collect()
}

pub(crate) fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("bad {what}: `{s}`")))
}
