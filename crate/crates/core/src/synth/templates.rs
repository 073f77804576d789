//! User-agent templates per browser; `extract_browser` recovers the name.

pub(super) fn user_agent(browser: &str, variant: u32) -> String {
    let v = variant % 4;
    match browser {
        "Android" => format!(
            "Mozilla/5.0 (Linux; U; Android 4.{v}.3; en-au) AppleWebKit/534.30 (KHTML, like Gecko) Version/4.0 Mobile Safari/534.30"
        ),
        "Chrome" => format!(
            "Mozilla/5.0 (Windows NT 6.1; WOW64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/3{}.0.1750.1{v}4 Safari/537.36",
            2 + v
        ),
        "Firefox" => format!(
            "Mozilla/5.0 (Windows NT 6.1; rv:2{}.0) Gecko/20100101 Firefox/2{}.0",
            5 + v,
            5 + v
        ),
        "Internet Explorer" => match v {
            0 => "Mozilla/4.0 (compatible; MSIE 7.0; Windows NT 5.1)".to_owned(),
            1 => "Mozilla/4.0 (compatible; MSIE 8.0; Windows NT 6.1; Trident/4.0)".to_owned(),
            2 => "Mozilla/5.0 (compatible; MSIE 10.0; Windows NT 6.1; Trident/6.0)".to_owned(),
            _ => "Mozilla/5.0 (Windows NT 6.1; Trident/7.0; rv:11.0) like Gecko".to_owned(),
        },
        "Opera" => format!("Opera/9.80 (Windows NT 6.1) Presto/2.12.388 Version/12.1{v}"),
        "PSP" => format!("Mozilla/4.0 (PSP (PlayStation Portable); 2.0{v})"),
        "Safari" => format!(
            "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_9_{v}) AppleWebKit/537.75.14 (KHTML, like Gecko) Version/7.0.3 Safari/537.75.14"
        ),
        "SeaMonkey" => format!(
            "Mozilla/5.0 (Windows NT 6.1; rv:2{v}.0) Gecko/20100101 Firefox/2{v}.0 SeaMonkey/2.2{v}"
        ),
        other => other.to_owned(),
    }
}

const SCREENS: [&str; 4] = ["1920x1080", "1366x768", "1280x1024", "1440x900"];

/// Device signature: user agent plus a few device attributes.
pub(super) fn device_signature(browser: &str, variant: u32) -> String {
    format!(
        "{}|{}|UTC+10|en-AU",
        user_agent(browser, variant),
        SCREENS[(variant / 4 % 4) as usize]
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::extract_browser;
    use crate::schema::BROWSERS;

    #[test]
    fn every_template_round_trips() {
        for b in BROWSERS {
            for v in 0..16 {
                assert_eq!(extract_browser(&device_signature(b, v)), b, "{b} variant {v}");
            }
        }
    }
}
