#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gonlab/common.hpp"
#include "gonlab/gate.hpp"

namespace gonlab {

struct Date {
    int year = 1970, month = 1, day = 1;
    auto operator<=>(const Date&) const = default;

    static Date parse(const std::string& iso);  // "YYYY-MM-DD", validated
    std::string to_string() const;
};

enum class Eye { Left, Right };
enum class Sex { M, F };
enum class Laterality { Left, Right, Both };

enum class DiagnosisCategory { GonPositive, GonNegative, SuspectOrOHT, Unknown };

enum class ExclusionReason {
    PreDiagnosis,
    Suspect,
    OcularHypertension,
    UnknownCode,
    Child,
    LowQuality,
    MissingOD,
    NoDiagnosis,
};

std::string to_string(ExclusionReason r);

// Positive | Negative | Excluded(reason) | Unlabeled (pre-derivation)
struct GonLabel {
    enum class State { Unlabeled, Positive, Negative, Excluded };
    State state = State::Unlabeled;
    std::optional<ExclusionReason> reason;

    static GonLabel positive() { return {State::Positive, std::nullopt}; }
    static GonLabel negative() { return {State::Negative, std::nullopt}; }
    static GonLabel excluded(ExclusionReason r) { return {State::Excluded, r}; }
    bool is_eligible() const { return state == State::Positive || state == State::Negative; }
    bool operator==(const GonLabel&) const = default;
};

struct DomainDescriptor {
    std::string domain_id;
    std::string display_name;
    std::string camera;
    std::optional<double> fov_degrees;
};

struct ImageRecord {
    std::string image_id;
    std::string patient_id;
    Eye eye = Eye::Left;
    Date acquired_at;
    std::string domain_id;
    std::string image_path;
    std::optional<std::string> mask_path;
    std::optional<int> age_years;
    std::optional<Sex> sex;
    GonLabel label_state;
};

struct DiagnosisEvent {
    std::string patient_id;
    Laterality laterality = Laterality::Both;
    Date occurred_at;
    std::string code;
    DiagnosisCategory category = DiagnosisCategory::Unknown;
};

enum class Split { Train, Val, Test };

struct SplitAssignment {
    std::map<std::string, Split> by_image;  // ordered for stable serialization
    std::vector<std::string> warnings;
};

struct DomainPartition {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> target;
    std::string target_domain_id;
};

using CodeMap = std::unordered_map<std::string, DiagnosisCategory>;

struct Manifest {
    std::vector<ImageRecord> records;
};

// --- ingestion ---------------------------------------------------------

// JSON-Lines, one image object per line; errors carry the line number.
std::vector<ImageRecord> ingest_manifest(const std::string& path);
std::vector<DiagnosisEvent> ingest_diagnoses(const std::string& path, const CodeMap& code_map);

CodeMap load_code_map(const std::string& path);
CodeMap default_code_map();

DiagnosisCategory categorize_code(const std::string& code, const CodeMap& code_map);

// --- labeling ----------------------------------------------------------

// Per (patient, eye): images at/after the earliest positive diagnosis are
// Positive, earlier ones Excluded(PreDiagnosis); suspect/OHT taints the
// eye; negative-only eyes are Negative; unknown-only and event-free eyes
// are excluded. Labels are per-eye, never per-patient.
void derive_eye_labels(std::vector<ImageRecord>& records,
                       const std::vector<DiagnosisEvent>& events);

// Exclusion precedence: Child > (already set: Suspect/OHT/PreDiagnosis/...)
// > MissingOD > LowQuality.
void apply_exclusions(std::vector<ImageRecord>& records,
                      const std::unordered_map<std::string, GateResult>& gate_results,
                      int min_age = 18);

// counts per reason + kept + ingested, Fig.-2-flowchart style
struct FlowReport {
    long n_ingested = 0;
    long n_kept = 0;
    std::map<std::string, long> excluded_by_reason;
};
FlowReport flow_report(const std::vector<ImageRecord>& records);

// --- partitioning ------------------------------------------------------

struct SplitRatios {
    double train = 0.85, val = 0.05, test = 0.10;
    void validate() const;
};

// Patient-disjoint stratified split over non-excluded records. Strata are
// (decade age band, sex, any-positive) per patient; strata with fewer
// patients than splits merge into the nearest age band.
SplitAssignment stratified_split(const std::vector<ImageRecord>& records,
                                 const SplitRatios& ratios, uint64_t seed);

// Leave-one-domain-out: per source domain a patient-disjoint,
// label-stratified (1-val_frac)/val_frac split into the joint train/val
// pools; the target domain is wholly reserved.
DomainPartition lodo_partition(const std::vector<ImageRecord>& records,
                               const std::string& target_domain_id, double val_frac = 0.10,
                               uint64_t seed = 0);

std::string split_assignment_json(const SplitAssignment& a);
std::string domain_partition_json(const DomainPartition& p);

}  // namespace gonlab
