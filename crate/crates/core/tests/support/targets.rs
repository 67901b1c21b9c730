//! Fixtures engineered to reproduce target values on synthetic data. Counts
//! are chosen so that the rounded targets follow exactly from integer domain
//! counts.

use std::collections::BTreeSet;

use nsflow_core::flowmap::MeasurementSnapshot;
use nsflow_core::resolver::ResolutionStatus;

use super::world::{date, World};

/// Datasets for the two-domain resolution-flow example.
pub mod sample_flows {
    pub const PREFIX2AS_V4: &str = "208.80.152.0\t22\t14907\n185.71.138.0\t24\t14907\n200.160.0.0\t20\t22548\n";
    pub const PREFIX2AS_V6: &str = "2620:0:860::\t46\t14907\n2001:12ff::\t32\t22548\n";
    pub const AS2ORG: &str = "\
# format:org_id|changed|org_name|country|source
WMF-ARIN|20230101|Wikimedia Foundation Inc.|US|ARIN
NIC-BR-LACNIC|20230101|NIC.BR|BR|LACNIC
# format:aut|changed|aut_name|org_id|opaque_id|source
14907|20230101|WIKIMEDIA|WMF-ARIN||ARIN
22548|20230101|NIC.BR|NIC-BR-LACNIC||LACNIC
";
    pub const TRANCO: &str = "1,wikipedia.org\n2,dns.br\n";
    pub const FIXTURE: &str = concat!(
        r#"{"domain":"wikipedia.org","ns_hosts":["ns0.wikimedia.org","ns1.wikimedia.org"],"#,
        r#""ns_addresses":{"ns0.wikimedia.org":["208.80.154.224","2620:0:861:ED1A::1"],"ns1.wikimedia.org":["208.80.153.231"]},"status":"ok"}"#,
        "\n",
        r#"{"domain":"dns.br","ns_hosts":["a.dns.br"],"ns_addresses":{"a.dns.br":["200.160.0.10","2001:12ff::10"]},"status":"ok"}"#,
        "\n"
    );
}

pub const TOP10: [&str; 10] = [
    "CLOUDFLARENET",
    "AMAZON-02",
    "GODADDY-DNS",
    "ALIBABA-CN-NET",
    "GOOGLE",
    "TIGGEE",
    "MICROSOFT-CORP",
    "NSONE",
    "IONOS-AS",
    "OVH",
];

const TOP10_ASNS: [u32; 10] = [13335, 16509, 44273, 37963, 15169, 16552, 8075, 62597, 8560, 16276];
const TOP10_COUNTRIES: [&str; 10] = ["US", "US", "US", "CN", "US", "US", "US", "US", "DE", "FR"];

fn top10_providers(w: &mut World) -> Vec<usize> {
    (0..10)
        .map(|i| w.provider_with_asn(TOP10_ASNS[i], TOP10[i], &format!("{} org", TOP10[i]), TOP10_COUNTRIES[i]))
        .collect()
}

/// A world whose top 10 follows the period's `TOP10` order. Tail providers
/// host fewer domains than the tenth entry; some domains are shared between
/// two providers and some fail to resolve. Every period uses the same
/// providers, so the routing and organization datasets are identical.
pub fn ranking_world(period: usize, jitter: usize) -> World {
    let mut w = World::default();
    let top = top10_providers(&mut w);
    let tail: Vec<usize> = (0..15).map(|i| w.provider(&format!("TAIL-{i:02}"), &format!("Tail {i}"), "NL")).collect();
    // period 3 swaps positions 6 and 7
    let mut base = [120, 100, 90, 80, 70, 60, 50, 40, 30, 20];
    if period == 3 {
        base.swap(5, 6);
    }
    for (i, &p) in top.iter().enumerate() {
        w.add_many("t", ".com", base[i] + jitter, p);
    }
    for (i, &p) in tail.iter().enumerate() {
        w.add_many("u", ".org", 1 + i % 5, p);
    }
    // shared domains add one count to each side without reordering
    for (i, &p) in tail.iter().take(5).enumerate() {
        w.add_domain(&format!("shared{i}.net"), &[top[0], p]);
    }
    for i in 0..7 {
        w.add_unresolved(&format!("gone{i}.com"), ResolutionStatus::ResolutionFailed);
    }
    w
}

/// Period, run date and jitter of the two snapshots in each period, dated
/// inside the three period bounds.
pub const RANKING_RUNS: [(usize, (i32, u32, u32), usize); 6] = [
    (1, (2022, 12, 16), 0),
    (1, (2023, 1, 9), 2),
    (2, (2023, 1, 23), 1),
    (2, (2023, 2, 6), 3),
    (3, (2023, 2, 13), 0),
    (3, (2023, 3, 15), 4),
];

pub fn ranking_periods() -> [Vec<MeasurementSnapshot>; 3] {
    let mut periods: [Vec<MeasurementSnapshot>; 3] = Default::default();
    for (period, (y, m, d), jitter) in RANKING_RUNS {
        periods[period - 1].push(ranking_world(period, jitter).measure(date(y, m, d)));
    }
    periods
}

/// Provider ids of the `TOP10` set inside any world built with
/// `top10_providers` first.
pub fn top10_ids() -> BTreeSet<String> {
    TOP10_ASNS.iter().map(|a| format!("ORG-{a}")).collect()
}

/// Three snapshots of 100 resolved domains each where the `TOP10` providers
/// host 39, 25 and 26 domains: mean 0.30, peak 0.39 on the middle date.
pub const CONCENTRATION_RUNS: [((i32, u32, u32), usize); 3] =
    [((2022, 12, 16), 25), ((2023, 1, 29), 39), ((2023, 3, 15), 26)];

pub fn concentration_series() -> Vec<MeasurementSnapshot> {
    CONCENTRATION_RUNS
        .into_iter()
        .map(|((y, m, d), hosted)| concentration_world(hosted).measure(date(y, m, d)))
        .collect()
}

/// 100 resolved domains, `hosted` of them on `TOP10` providers and the rest
/// each on its own small provider, plus three timeouts.
pub fn concentration_world(hosted: usize) -> World {
    let mut w = World::default();
    let top = top10_providers(&mut w);
    for i in 0..hosted {
        w.add_domain(&format!("top{i}.com"), &[top[i % 10]]);
    }
    for i in 0..(100 - hosted) {
        let p = w.provider(&format!("SMALL-{i:03}"), &format!("Small {i}"), "BR");
        w.add_domain(&format!("small{i}.com"), &[p]);
    }
    for i in 0..3 {
        w.add_unresolved(&format!("dark{i}.com"), ResolutionStatus::TimedOut);
    }
    w
}

pub fn single_provider_world() -> World {
    let mut w = World::default();
    let p = w.provider("ONLYNET", "Only", "US");
    w.add_many("d", ".com", 25, p);
    w
}

pub fn single_provider_snapshot() -> MeasurementSnapshot {
    single_provider_world().measure(date(2023, 1, 1))
}

/// `.br`: US 4694, BR 4684, FR 390 and DE 232 of 10 000 domains, so US and
/// BR round to 46.9% and 46.8% and the sub-4% remainder to 6.2%.
pub fn br_world() -> World {
    let mut w = World::default();
    let us = w.provider("CLOUDFLARENET", "Cloudflare, Inc.", "US");
    let br = w.provider("LOCAWEB", "Locaweb Servicos de Internet S/A", "BR");
    let fr = w.provider("OVH", "OVH SAS", "FR");
    let de = w.provider("HETZNER-AS", "Hetzner Online GmbH", "DE");
    for (p, n) in [(us, 4694), (br, 4684), (fr, 390), (de, 232)] {
        w.add_many("site", ".com.br", n, p);
    }
    for i in 0..40 {
        w.add_unresolved(&format!("down{i}.com.br"), ResolutionStatus::NoNsRecords);
    }
    w
}

pub fn br_snapshot() -> MeasurementSnapshot {
    br_world().measure(date(2023, 3, 15))
}

/// Folding boundary: CL holds exactly 4.0% and stays listed, FR 3.9% folds.
pub fn fold_boundary_world() -> World {
    let mut w = World::default();
    let br = w.provider("BR-NET", "BR Net", "BR");
    let us = w.provider("US-NET", "US Net", "US");
    let cl = w.provider("CL-NET", "CL Net", "CL");
    let fr = w.provider("FR-NET", "FR Net", "FR");
    for (p, n) in [(br, 5000), (us, 4210), (cl, 400), (fr, 390)] {
        w.add_many("x", ".br", n, p);
    }
    w
}

pub fn fold_boundary_snapshot() -> MeasurementSnapshot {
    fold_boundary_world().measure(date(2023, 3, 15))
}

/// BRICS ccTLDs where RU and US together host 733 of 1000 domains.
pub fn brics_world() -> World {
    let mut w = World::default();
    let ru = w.provider("YANDEX-CLOUD", "Yandex.Cloud LLC", "RU");
    let us = w.provider("CLOUDFLARENET", "Cloudflare, Inc.", "US");
    let br = w.provider("LOCAWEB", "Locaweb", "BR");
    let cn = w.provider("ALIBABA-CN-NET", "Alibaba", "CN");
    let de = w.provider("HETZNER-AS", "Hetzner", "DE");
    let fr = w.provider("OVH", "OVH SAS", "FR");
    let inn = w.provider("NIXI", "NIXI", "IN");
    let za = w.provider("XNEELO", "Xneelo (Pty) Ltd", "ZA");
    let plan: [(&str, &[(usize, usize)]); 5] = [
        (".ru", &[(ru, 365), (us, 199), (de, 36)]),
        (".br", &[(us, 94), (br, 94), (fr, 12)]),
        (".cn", &[(cn, 80), (us, 20)]),
        (".in", &[(us, 36), (inn, 24)]),
        (".za", &[(za, 21), (us, 19)]),
    ];
    for (suffix, parts) in plan {
        for &(p, n) in parts {
            w.add_many("b", suffix, n, p);
        }
    }
    w
}

pub fn brics_snapshot() -> MeasurementSnapshot {
    brics_world().measure(date(2023, 3, 15))
}

/// 95 792 BRICS and EU ccTLD domains of which 91 286 resolve; 54 168 of the
/// resolved ones are under `.ru`.
pub fn cctld_world() -> World {
    let mut w = World::default();
    let providers: Vec<usize> = ["RU", "US", "BR", "CN", "IN", "ZA", "DE", "FR", "NL"]
        .iter()
        .map(|c| w.provider(&format!("NET-{c}"), &format!("Net {c}"), c))
        .collect();
    let resolved = [(".ru", 54_168), (".br", 12_000), (".cn", 8_000), (".in", 7_000), (".za", 3_000), (".eu", 7_118)];
    for (i, (suffix, n)) in resolved.into_iter().enumerate() {
        for k in 0..n {
            let p = providers[(i + k) % providers.len()];
            w.add_domain(&format!("c{k}{suffix}"), &[p]);
        }
    }
    let unresolved = [
        (".ru", 2_000, ResolutionStatus::NoNsRecords),
        (".br", 1_500, ResolutionStatus::ResolutionFailed),
        (".cn", 1_006, ResolutionStatus::TimedOut),
    ];
    for (suffix, n, status) in unresolved {
        for k in 0..n {
            w.add_unresolved(&format!("x{k}{suffix}"), status);
        }
    }
    w
}

/// Provider domains hosted on their own networks or elsewhere.
pub fn self_hosting_world() -> World {
    let mut w = World::default();
    let cf = w.provider_with_asn(13335, "CLOUDFLARENET", "Cloudflare, Inc.", "US");
    let oracle = w.provider_with_asn(31898, "ORACLE-BMC-31898", "Oracle Corporation", "US");
    let godaddy = w.provider_with_asn(44273, "GODADDY-DNS", "GoDaddy.com, LLC", "DE");
    let akamai = w.provider_with_asn(20189, "AKAMAI-ANS2", "Akamai International B.V.", "NL");
    let google = w.provider_with_asn(15169, "GOOGLE", "Google LLC", "US");
    let ms = w.provider_with_asn(8075, "MICROSOFT-CORP-MSN-AS-BLOCK", "Microsoft Corporation", "US");
    let ovh = w.provider_with_asn(16276, "OVH", "OVH SAS", "FR");
    w.add_domain("cloudflare.com", &[cf]);
    w.add_domain("amazon.com", &[oracle]);
    w.add_domain("godaddy.com", &[godaddy, akamai]);
    w.add_domain("google.com", &[google]);
    w.add_domain("microsoft.com", &[ms]);
    w.add_domain("ovh.com", &[ovh]);
    w
}

pub fn self_hosting_snapshot() -> MeasurementSnapshot {
    self_hosting_world().measure(date(2023, 3, 15))
}

/// Governmental suffixes: `.gov.br` mostly on SERPRO, no `.gov.ru` at all.
pub fn gov_world() -> World {
    let mut w = World::default();
    let serpro = w.provider("SERPRO", "Servico Federal de Processamento de Dados - SERPRO", "BR");
    let rnp = w.provider("RNP", "Rede Nacional de Ensino e Pesquisa", "BR");
    let cf = w.provider("CLOUDFLARENET", "Cloudflare, Inc.", "US");
    let nic_in = w.provider("NIC-IN", "National Informatics Centre", "IN");
    let cn = w.provider("CHINANET", "China Telecom", "CN");
    let za = w.provider("SITA", "State IT Agency", "ZA");
    w.add_many("a", ".gov.br", 30, serpro);
    w.add_many("b", ".gov.br", 6, rnp);
    w.add_many("c", ".gov.br", 4, cf);
    w.add_many("d", ".gov.in", 12, nic_in);
    w.add_many("e", ".gov.cn", 9, cn);
    w.add_domain("only.gov.za", &[za]);
    w.add_many("f", ".ru", 5, cf);
    w
}

pub fn gov_snapshot() -> MeasurementSnapshot {
    gov_world().measure(date(2023, 3, 15))
}
