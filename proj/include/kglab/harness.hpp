#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kglab/grid.hpp"
#include "kglab/randomization.hpp"
#include "kglab/solver.hpp"

namespace kglab {

// Flat "key = value" text with [section] headers; keys are stored as "section.key".
// '#' starts a comment. Repeated keys are an error.
class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    const std::map<std::string, std::string>& entries() const { return kv_; }

    // Typed getters; a missing key returns the default, a malformed value throws
    // invalid_argument naming the key.
    std::string text(const std::string& key, const std::string& def = "") const;
    double real(const std::string& key, double def = 0) const;
    long integer(const std::string& key, long def = 0) const;
    std::uint64_t u64(const std::string& key, std::uint64_t def = 0) const;
    bool flag(const std::string& key, bool def = false) const;
    std::vector<double> reals(const std::string& key) const;
    std::vector<int> integers(const std::string& key) const;

    // Sorted "key = value" lines; the config hash is taken over this text.
    std::string canonical() const;

private:
    std::map<std::string, std::string> kv_;
};

// Parsers shared by Config and the tools. "inf" and "-inf" are accepted as reals.
double parse_real(const std::string& s);
long parse_integer(const std::string& s);
std::vector<std::string> split_list(const std::string& s);

enum class ExperimentKind {
    decay,
    strichartz,
    khinchin,
    maxineq,
    randomize,
    solve,
    cone_audit,
    bush,
    thresholds,
    trilinear
};

const char* kind_name(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);
std::vector<ExperimentKind> all_kinds();

enum class ParamType { integer, real, u64, text, flag, integers, reals };

struct ParamSpec {
    std::string key;
    ParamType type = ParamType::real;
    std::string def;
    std::string doc;
};

// Every accepted key of a kind with its default.
std::vector<ParamSpec> parameter_table(ExperimentKind k);
// The defaults as a commented config file.
std::string default_config_text(ExperimentKind k);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::thresholds;
    std::uint64_t seed = 1;
    int threads = 1;
    // Defaults filled in; every key is in the parameter table of the kind.
    Config resolved;

    TorusGrid grid() const;
    NonlinearModel model() const;
    RandomSeedPlan seed_plan() const;
    // Largest simulated time, 0 for kinds without a lab-frame evolution.
    double horizon() const;
    std::uint64_t hash() const;

    // Fills defaults and validates. Throws invalid_argument listing one "key: message" per problem.
    static ExperimentConfig from_config(ExperimentKind kind, const Config& c);
};

// The same checks as from_config without throwing; empty means valid.
std::vector<std::string> validate_config(ExperimentKind kind, const Config& c);

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h = 14695981039346656037ull);
std::string hex64(std::uint64_t h);
// %.17g, with "inf", "-inf" and "nan" for non-finite values.
std::string format_real(double x);

struct CsvColumn {
    std::string name;
    std::string doc;
};

struct CsvTable {
    std::vector<CsvColumn> columns;
    std::vector<std::vector<std::string>> rows;

    void add(const std::vector<double>& row);
    void add_cells(std::vector<std::string> row);
    std::string render() const;
    std::string schema_json(const std::string& file) const;
};

// Output-only JSON value; reals are printed at 17 significant digits, non-finite reals as null.
class Json {
public:
    enum class Type { null, boolean, number, integer, string, array, object };

    Json() = default;
    Json(bool b);
    Json(double x);
    Json(int x);
    Json(long x);
    Json(long long x);
    Json(unsigned long x);
    Json(unsigned long long x);
    Json(const char* s);
    Json(std::string s);
    Json(const std::vector<double>& xs);
    Json(const std::vector<int>& xs);

    static Json array();
    static Json object();

    Json& operator[](const std::string& key);
    void push(Json v);
    Type type() const { return type_; }
    std::string dump(int indent = 2) const;

private:
    void write(std::string& out, int indent, int level) const;

    Type type_ = Type::null;
    bool b_ = false;
    double x_ = 0;
    long long i_ = 0;
    std::string s_;
    std::vector<Json> items_;
    std::vector<std::pair<std::string, Json>> fields_;
};

struct OutputRecord {
    std::string path;  // relative to the output directory
    std::uint64_t hash = 0;
    std::size_t bytes = 0;
};

struct RunManifest {
    std::string kind;
    std::uint64_t config_hash = 0;
    std::string version;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::vector<OutputRecord> outputs;
    bool pass = false;
    std::vector<std::string> failures;

    // Hash over the sorted (path, hash) list; the determinism contract is stated on this value.
    std::uint64_t output_hash() const;
    std::string to_json() const;
};

// Files written by one shard. Every shard owns a disjoint set of names.
class ShardOutput {
public:
    explicit ShardOutput(std::string dir) : dir_(std::move(dir)) {}

    void csv(const std::string& name, const CsvTable& t);
    void json(const std::string& name, const Json& j);
    void field(const std::string& name, const RealField& f);
    void text(const std::string& name, const std::string& body);
    void fail(const std::string& why) { failures_.push_back(why); }

    const std::vector<std::string>& files() const { return files_; }
    const std::vector<std::string>& failures() const { return failures_; }

private:
    std::string dir_;
    std::vector<std::string> files_;
    std::vector<std::string> failures_;
};

struct Shard {
    std::string name;
    std::function<void(ShardOutput&)> run;
};

// Runs the shards on up to `threads` workers, then merges single-threaded: hashes every file
// and writes manifest.json. A shard error is rethrown with the shard name attached.
RunManifest run_shards(const ExperimentConfig& cfg, const std::vector<Shard>& shards, const std::string& out_dir,
                       const std::function<void(ShardOutput&)>& merge = {});

// Dispatches to the owning module; writes outputs and manifest.json into out_dir.
RunManifest run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

const char* kglab_version();

} // namespace kglab
