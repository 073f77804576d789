//! Browser identification from the device signature's user-agent text.

pub const UNKNOWN_BROWSER: &str = "UNKNOWN";

// First match wins. Opera and SeaMonkey user agents also carry the Chrome,
// Firefox or Safari tokens, and Chrome carries Safari, so order matters.
const RULES: &[(&[&str], &str)] = &[
    (&["PlayStation Portable", "PSP ("], "PSP"),
    (&["Opera", "OPR/"], "Opera"),
    (&["SeaMonkey/"], "SeaMonkey"),
    (&["MSIE ", "Trident/"], "Internet Explorer"),
    (&["Firefox/"], "Firefox"),
    (&["Chrome/", "CriOS/"], "Chrome"),
    (&["Android"], "Android"),
    (&["Safari/"], "Safari"),
];

/// Returns the browser named by `device_signature`, or [`UNKNOWN_BROWSER`].
pub fn extract_browser(device_signature: &str) -> &'static str {
    RULES
        .iter()
        .find(|(needles, _)| needles.iter().any(|n| device_signature.contains(n)))
        .map_or(UNKNOWN_BROWSER, |(_, name)| name)
}
