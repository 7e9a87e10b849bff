//! Extracts post text from a forum page: navigation, scripts and markup go,
//! BBCode and entities are resolved, and each post becomes one document.
//!
//! ```text
//! cargo run --example forum_html [page.html]
//! ```

use saudi_corpus::clean::{html_to_documents, CleanConfig, Cleaner};

const PAGE: &str = r#"<!DOCTYPE html>
<html><head><title>منتدى</title><script>var ad = "اعلان";</script></head>
<body>
<div class="nav">الرئيسية | الأقسام | تسجيل الدخول</div>
<div class="post">[quote=ابو فهد]وش رايكم في <b>المطعم</b> الجديد؟[/quote]<br>
  والله تجربتي كانت ممتازة&nbsp;والأسعار معقولة %D8%B1%D8%A7%D8%A6%D8%B9</div>
<div class="reply">[url=http://example.com]الرابط[/url] هنا لمن يبي يحجز</div>
<div class="reply">👍</div>
<div class="footer">جميع الحقوق محفوظة</div>
</body></html>"#;

fn main() -> saudi_corpus::Result<()> {
    let html = match std::env::args().nth(1) {
        Some(path) => {
            std::fs::read_to_string(&path).map_err(|e| saudi_corpus::Error::io(&path, e))?
        }
        None => PAGE.to_string(),
    };
    let cfg = CleanConfig::forum();
    let cleaner = Cleaner::new(cfg.clone())?;
    for doc in html_to_documents(&html, "page.html", &cfg)? {
        let (cleaned, decision) = cleaner.clean_document(&doc);
        println!(
            "{}\n  raw:     {:?}\n  cleaned: {:?}\n  {:?}",
            doc.doc_id, doc.text, cleaned.text, decision.reason
        );
    }
    Ok(())
}
