#include "gonlab/registry.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace gonlab {

using nlohmann::json;

// --- Date ---------------------------------------------------------------

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return d[m - 1];
}

}  // namespace

Date Date::parse(const std::string& iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        throw ValidationError("invalid date '" + iso + "' (expected YYYY-MM-DD)");
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(iso[i])))
            throw ValidationError("invalid date '" + iso + "'");
    Date d;
    d.year = std::stoi(iso.substr(0, 4));
    d.month = std::stoi(iso.substr(5, 2));
    d.day = std::stoi(iso.substr(8, 2));
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month))
        throw ValidationError("invalid calendar date '" + iso + "'");
    return d;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::string to_string(ExclusionReason r) {
    switch (r) {
        case ExclusionReason::PreDiagnosis: return "pre_diagnosis";
        case ExclusionReason::Suspect: return "suspect";
        case ExclusionReason::OcularHypertension: return "ocular_hypertension";
        case ExclusionReason::UnknownCode: return "unknown_code";
        case ExclusionReason::Child: return "child";
        case ExclusionReason::LowQuality: return "low_quality";
        case ExclusionReason::MissingOD: return "missing_od";
        case ExclusionReason::NoDiagnosis: return "no_diagnosis";
    }
    return "?";
}

// --- ingestion ------------------------------------------------------------

namespace {

Eye parse_eye(const std::string& s, int line) {
    if (s == "L") return Eye::Left;
    if (s == "R") return Eye::Right;
    throw ValidationError("invalid eye at line " + std::to_string(line));
}

Laterality parse_laterality(const std::string& s, int line) {
    if (s == "L") return Laterality::Left;
    if (s == "R") return Laterality::Right;
    if (s == "B") return Laterality::Both;
    throw ValidationError("invalid laterality at line " + std::to_string(line));
}

json parse_line(const std::string& line, int line_no) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw ValidationError("malformed JSON at line " + std::to_string(line_no) + ": " +
                              e.what());
    }
}

std::string require_string(const json& j, const char* key, int line) {
    if (!j.contains(key) || !j[key].is_string())
        throw ValidationError(std::string("missing or non-string field '") + key + "' at line " +
                              std::to_string(line));
    return j[key].get<std::string>();
}

}  // namespace

std::vector<ImageRecord> ingest_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open manifest: " + path);
    std::vector<ImageRecord> records;
    std::set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json j = parse_line(line, line_no);
        ImageRecord r;
        r.image_id = require_string(j, "image_id", line_no);
        if (!seen_ids.insert(r.image_id).second)
            throw ValidationError("duplicate image_id '" + r.image_id + "' at line " +
                                  std::to_string(line_no));
        r.patient_id = require_string(j, "patient_id", line_no);
        r.eye = parse_eye(require_string(j, "eye", line_no), line_no);
        r.acquired_at = Date::parse(require_string(j, "acquired_at", line_no));
        r.domain_id = require_string(j, "domain", line_no);
        r.image_path = require_string(j, "image_path", line_no);
        if (j.contains("mask_path") && !j["mask_path"].is_null())
            r.mask_path = j["mask_path"].get<std::string>();
        if (j.contains("age_years") && !j["age_years"].is_null()) {
            const int age = j["age_years"].get<int>();
            if (age < 0)
                throw ValidationError("negative age_years at line " + std::to_string(line_no));
            r.age_years = age;
        }
        if (j.contains("sex") && !j["sex"].is_null()) {
            const std::string s = j["sex"].get<std::string>();
            if (s == "M")
                r.sex = Sex::M;
            else if (s == "F")
                r.sex = Sex::F;
            else
                throw ValidationError("invalid sex at line " + std::to_string(line_no));
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<DiagnosisEvent> ingest_diagnoses(const std::string& path, const CodeMap& code_map) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open diagnosis file: " + path);
    std::vector<DiagnosisEvent> events;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json j = parse_line(line, line_no);
        DiagnosisEvent e;
        e.patient_id = require_string(j, "patient_id", line_no);
        e.laterality = parse_laterality(require_string(j, "laterality", line_no), line_no);
        e.occurred_at = Date::parse(require_string(j, "occurred_at", line_no));
        e.code = require_string(j, "code", line_no);
        e.category = categorize_code(e.code, code_map);
        events.push_back(std::move(e));
    }
    return events;
}

CodeMap load_code_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open code map: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError("malformed code map: " + std::string(e.what()));
    }
    CodeMap map;
    for (auto& [code, val] : j.items()) {
        const std::string v = val.get<std::string>();
        if (v == "pos")
            map[code] = DiagnosisCategory::GonPositive;
        else if (v == "neg")
            map[code] = DiagnosisCategory::GonNegative;
        else if (v == "suspect_oht")
            map[code] = DiagnosisCategory::SuspectOrOHT;
        else if (v == "unknown")
            map[code] = DiagnosisCategory::Unknown;
        else
            throw ValidationError("invalid code map category '" + v + "' for code '" + code + "'");
    }
    return map;
}

CodeMap default_code_map() {
    return {
        {"glaucoma", DiagnosisCategory::GonPositive},
        {"glaucoma_surgery", DiagnosisCategory::GonPositive},
        {"trabeculectomy", DiagnosisCategory::GonPositive},
        {"normal", DiagnosisCategory::GonNegative},
        {"cataract", DiagnosisCategory::GonNegative},
        {"diabetic_retinopathy", DiagnosisCategory::GonNegative},
        {"amd", DiagnosisCategory::GonNegative},
        {"refraction_check", DiagnosisCategory::GonNegative},
        {"gon_suspect", DiagnosisCategory::SuspectOrOHT},
        {"ocular_hypertension", DiagnosisCategory::SuspectOrOHT},
    };
}

DiagnosisCategory categorize_code(const std::string& code, const CodeMap& code_map) {
    auto it = code_map.find(code);
    return it == code_map.end() ? DiagnosisCategory::Unknown : it->second;
}

// --- labeling --------------------------------------------------------------

void derive_eye_labels(std::vector<ImageRecord>& records,
                       const std::vector<DiagnosisEvent>& events) {
    struct EyeEvidence {
        std::optional<Date> first_positive;
        bool any_suspect = false;
        bool any_negative = false;
        bool any_unknown = false;
        bool oht = false;  // suspect evidence mentioned hypertension
    };
    std::map<std::pair<std::string, Eye>, EyeEvidence> evidence;

    auto feed = [&](const std::string& patient, Eye eye, const DiagnosisEvent& e) {
        EyeEvidence& ev = evidence[{patient, eye}];
        switch (e.category) {
            case DiagnosisCategory::GonPositive:
                if (!ev.first_positive || e.occurred_at < *ev.first_positive)
                    ev.first_positive = e.occurred_at;
                break;
            case DiagnosisCategory::SuspectOrOHT:
                ev.any_suspect = true;
                if (e.code.find("hypertension") != std::string::npos ||
                    e.code.find("oht") != std::string::npos)
                    ev.oht = true;
                break;
            case DiagnosisCategory::GonNegative:
                ev.any_negative = true;
                break;
            case DiagnosisCategory::Unknown:
                ev.any_unknown = true;
                break;
        }
    };

    for (const auto& e : events) {
        // "Both" expands to two per-eye events at the same date.
        if (e.laterality == Laterality::Left || e.laterality == Laterality::Both)
            feed(e.patient_id, Eye::Left, e);
        if (e.laterality == Laterality::Right || e.laterality == Laterality::Both)
            feed(e.patient_id, Eye::Right, e);
    }

    for (auto& r : records) {
        auto it = evidence.find({r.patient_id, r.eye});
        if (it == evidence.end()) {
            r.label_state = GonLabel::excluded(ExclusionReason::NoDiagnosis);
            continue;
        }
        const EyeEvidence& ev = it->second;
        if (ev.first_positive) {
            // GON is incurable: once positive, every later image is positive;
            // earlier images cannot be trusted as negative.
            r.label_state = r.acquired_at >= *ev.first_positive
                                ? GonLabel::positive()
                                : GonLabel::excluded(ExclusionReason::PreDiagnosis);
        } else if (ev.any_suspect) {
            r.label_state = GonLabel::excluded(ev.oht ? ExclusionReason::OcularHypertension
                                                      : ExclusionReason::Suspect);
        } else if (ev.any_negative) {
            r.label_state = GonLabel::negative();
        } else {
            r.label_state = GonLabel::excluded(ExclusionReason::UnknownCode);
        }
    }
}

void apply_exclusions(std::vector<ImageRecord>& records,
                      const std::unordered_map<std::string, GateResult>& gate_results,
                      int min_age) {
    for (auto& r : records) {
        if (r.age_years && *r.age_years < min_age) {
            r.label_state = GonLabel::excluded(ExclusionReason::Child);
            continue;
        }
        if (r.label_state.state == GonLabel::State::Excluded) continue;  // keep earlier reason
        auto it = gate_results.find(r.image_id);
        if (it == gate_results.end()) continue;
        if (!it->second.od_complete)
            r.label_state = GonLabel::excluded(ExclusionReason::MissingOD);
        else if (!it->second.passed)
            r.label_state = GonLabel::excluded(ExclusionReason::LowQuality);
    }
}

FlowReport flow_report(const std::vector<ImageRecord>& records) {
    FlowReport rep;
    rep.n_ingested = static_cast<long>(records.size());
    for (const auto& r : records) {
        if (r.label_state.is_eligible())
            ++rep.n_kept;
        else if (r.label_state.state == GonLabel::State::Excluded)
            ++rep.excluded_by_reason[to_string(*r.label_state.reason)];
        else
            ++rep.excluded_by_reason["unlabeled"];
    }
    return rep;
}

// --- partitioning ------------------------------------------------------------

void SplitRatios::validate() const {
    if (train <= 0 || val <= 0 || test <= 0)
        throw ValidationError("split ratios must be positive");
    if (std::fabs(train + val + test - 1.0) > 1e-9)
        throw ValidationError("split ratios must sum to 1");
}

namespace {

// decade bands 18-29, 30-39, ..., 80+; band 7 = age unknown
int age_band(const std::optional<int>& age) {
    if (!age) return 7;
    if (*age < 30) return 0;
    if (*age >= 80) return 6;
    return (*age - 20) / 10;
}

struct PatientInfo {
    std::string patient_id;
    std::vector<std::string> image_ids;
    int band = 7;
    int sex = 2;       // 0=M, 1=F, 2=unknown
    bool positive = false;
};

// Patients grouped for stratification; attributes come from the record
// with the lexicographically smallest image_id so grouping is
// deterministic regardless of input order.
std::vector<PatientInfo> group_patients(const std::vector<ImageRecord>& records) {
    std::map<std::string, PatientInfo> by_patient;
    std::map<std::string, std::string> attr_source;
    for (const auto& r : records) {
        if (!r.label_state.is_eligible())
            throw ValidationError("stratified_split expects only eligible records (" + r.image_id +
                                  ")");
        PatientInfo& p = by_patient[r.patient_id];
        p.patient_id = r.patient_id;
        p.image_ids.push_back(r.image_id);
        if (r.label_state.state == GonLabel::State::Positive) p.positive = true;
        auto& src = attr_source[r.patient_id];
        if (src.empty() || r.image_id < src) {
            src = r.image_id;
            p.band = age_band(r.age_years);
            p.sex = r.sex ? static_cast<int>(*r.sex) : 2;
        }
    }
    std::vector<PatientInfo> out;
    out.reserve(by_patient.size());
    for (auto& [id, p] : by_patient) {
        std::sort(p.image_ids.begin(), p.image_ids.end());
        out.push_back(std::move(p));
    }
    return out;
}

// largest-remainder allocation of n into the given ratios
std::vector<long> allocate(long n, const std::vector<double>& ratios) {
    std::vector<long> counts(ratios.size());
    std::vector<std::pair<double, size_t>> rema;
    long assigned = 0;
    for (size_t i = 0; i < ratios.size(); ++i) {
        const double exact = n * ratios[i];
        counts[i] = static_cast<long>(std::floor(exact));
        assigned += counts[i];
        rema.emplace_back(exact - counts[i], i);
    }
    std::stable_sort(rema.begin(), rema.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (long k = 0; k < n - assigned; ++k) ++counts[rema[static_cast<size_t>(k)].second];
    return counts;
}

}  // namespace

SplitAssignment stratified_split(const std::vector<ImageRecord>& records,
                                 const SplitRatios& ratios, uint64_t seed) {
    ratios.validate();
    SplitAssignment assignment;
    auto patients = group_patients(records);

    using StratumKey = std::tuple<int, int, int>;  // (band, sex, label)
    std::map<StratumKey, std::vector<PatientInfo*>> strata;
    for (auto& p : patients) strata[{p.band, p.sex, p.positive ? 1 : 0}].push_back(&p);

    // Merge strata that cannot fill all three splits into the nearest age
    // band with the same (sex, label).
    bool merged = true;
    while (merged) {
        merged = false;
        for (auto it = strata.begin(); it != strata.end(); ++it) {
            if (it->second.size() >= 3 || strata.size() == 1) continue;
            auto [band, sex, label] = it->first;
            auto best = strata.end();
            int best_dist = 1 << 20;
            for (auto jt = strata.begin(); jt != strata.end(); ++jt) {
                if (jt == it) continue;
                auto [b2, s2, l2] = jt->first;
                int dist = std::abs(b2 - band) + (s2 != sex ? 100 : 0) + (l2 != label ? 1000 : 0);
                if (dist < best_dist) {
                    best_dist = dist;
                    best = jt;
                }
            }
            if (best == strata.end()) break;
            assignment.warnings.push_back("merging undersized stratum (band=" +
                                          std::to_string(band) + ", sex=" + std::to_string(sex) +
                                          ", label=" + std::to_string(label) + ")");
            best->second.insert(best->second.end(), it->second.begin(), it->second.end());
            strata.erase(it);
            merged = true;
            break;
        }
    }

    // Cumulative largest-remainder allocation: each stratum receives shares
    // that also settle the rounding backlog of earlier strata, so small
    // strata cannot collectively starve the val/test splits.
    const double ratio_of[3] = {ratios.train, ratios.val, ratios.test};
    long assigned[3] = {0, 0, 0};
    long processed = 0;
    uint64_t stratum_idx = 0;
    std::vector<std::pair<PatientInfo*, Split>> by_patient_split;
    for (auto& [key, members] : strata) {
        std::sort(members.begin(), members.end(),
                  [](const PatientInfo* a, const PatientInfo* b) {
                      return a->patient_id < b->patient_id;
                  });
        Rng rng(derive_seed(seed, "stratified_split", stratum_idx++));
        rng.shuffle(members);

        const long m = static_cast<long>(members.size());
        processed += m;
        double exact[3];
        long counts[3];
        long total = 0;
        for (int s = 0; s < 3; ++s) {
            exact[s] = static_cast<double>(processed) * ratio_of[s] -
                       static_cast<double>(assigned[s]);
            counts[s] = std::max(0L, static_cast<long>(std::floor(exact[s] + 1e-9)));
            counts[s] = std::min(counts[s], m);
            total += counts[s];
        }
        while (total < m) {  // hand leftovers to the most underserved split
            int best = 0;
            for (int s = 1; s < 3; ++s)
                if (exact[s] - counts[s] > exact[best] - counts[best]) best = s;
            ++counts[best];
            ++total;
        }
        while (total > m) {  // rare: clamping of a negative backlog overshot
            int worst = -1;
            for (int s = 0; s < 3; ++s)
                if (counts[s] > 0 && (worst < 0 || exact[s] - counts[s] < exact[worst] - counts[worst]))
                    worst = s;
            --counts[worst];
            --total;
        }

        size_t pos = 0;
        for (int s = 0; s < 3; ++s) {
            assigned[s] += counts[s];
            for (long k = 0; k < counts[s]; ++k, ++pos)
                by_patient_split.emplace_back(members[pos], static_cast<Split>(s));
        }
    }

    // Small strata can round every val/test share down to zero; splits with
    // a positive ratio must still receive at least one patient, so steal
    // from train (always the largest share).
    const double split_ratio[3] = {ratios.train, ratios.val, ratios.test};
    long split_count[3] = {0, 0, 0};
    for (const auto& [p, s] : by_patient_split) ++split_count[static_cast<int>(s)];
    for (int s = 0; s < 3; ++s) {
        if (split_ratio[s] <= 0.0 || split_count[s] > 0) continue;
        for (auto& [p, sp] : by_patient_split) {
            if (sp != Split::Train || split_count[static_cast<int>(Split::Train)] <= 1) continue;
            sp = static_cast<Split>(s);
            --split_count[static_cast<int>(Split::Train)];
            ++split_count[s];
            assignment.warnings.push_back("moved one train patient into an empty split");
            break;
        }
    }

    for (const auto& [p, s] : by_patient_split)
        for (const auto& iid : p->image_ids) assignment.by_image[iid] = s;
    return assignment;
}

DomainPartition lodo_partition(const std::vector<ImageRecord>& records,
                               const std::string& target_domain_id, double val_frac,
                               uint64_t seed) {
    if (val_frac <= 0.0 || val_frac >= 1.0) throw ValidationError("val_frac must be in (0,1)");
    std::map<std::string, std::vector<const ImageRecord*>> by_domain;
    for (const auto& r : records)
        if (r.label_state.is_eligible()) by_domain[r.domain_id].push_back(&r);
    if (by_domain.size() < 2) throw ValidationError("lodo_partition requires >= 2 domains");
    auto target_it = by_domain.find(target_domain_id);
    if (target_it == by_domain.end() || target_it->second.empty())
        throw ValidationError("target domain '" + target_domain_id + "' has no eligible records");

    DomainPartition part;
    part.target_domain_id = target_domain_id;
    for (const auto* r : target_it->second) part.target.push_back(r->image_id);
    std::sort(part.target.begin(), part.target.end());

    for (auto& [domain, recs] : by_domain) {
        if (domain == target_domain_id) continue;
        // patient-disjoint, label-stratified two-way split within the domain
        std::vector<ImageRecord> copy;
        copy.reserve(recs.size());
        for (const auto* r : recs) copy.push_back(*r);
        SplitAssignment a;
        {
            auto patients = group_patients(copy);
            std::map<int, std::vector<PatientInfo*>> strata;  // by label only
            for (auto& p : patients) strata[p.positive ? 1 : 0].push_back(&p);
            uint64_t stratum_idx = 0;
            for (auto& [label, members] : strata) {
                std::sort(members.begin(), members.end(),
                          [](const PatientInfo* x, const PatientInfo* y) {
                              return x->patient_id < y->patient_id;
                          });
                Rng rng(derive_seed(seed, "lodo/" + domain, stratum_idx++));
                rng.shuffle(members);
                const auto counts = allocate(static_cast<long>(members.size()),
                                             {1.0 - val_frac, val_frac});
                size_t pos = 0;
                for (int s = 0; s < 2; ++s)
                    for (long k = 0; k < counts[static_cast<size_t>(s)]; ++k, ++pos)
                        for (const auto& iid : members[pos]->image_ids)
                            a.by_image[iid] = s == 0 ? Split::Train : Split::Val;
            }
        }
        for (const auto& [iid, split] : a.by_image)
            (split == Split::Train ? part.train : part.val).push_back(iid);
    }
    std::sort(part.train.begin(), part.train.end());
    std::sort(part.val.begin(), part.val.end());
    return part;
}

std::string split_assignment_json(const SplitAssignment& a) {
    json j = json::object();
    for (const auto& [iid, s] : a.by_image)
        j[iid] = s == Split::Train ? "train" : (s == Split::Val ? "val" : "test");
    json root;
    root["assignment"] = j;
    root["warnings"] = a.warnings;
    return root.dump(2) + "\n";
}

std::string domain_partition_json(const DomainPartition& p) {
    json j;
    j["target_domain_id"] = p.target_domain_id;
    j["train"] = p.train;
    j["val"] = p.val;
    j["target"] = p.target;
    return j.dump(2) + "\n";
}

}  // namespace gonlab
