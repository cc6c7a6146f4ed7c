#include "ergodec/runner.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <utility>

#include "json.hpp"

#include "ergodec/basin.hpp"
#include "ergodec/choquet.hpp"
#include "ergodec/config.hpp"
#include "ergodec/errors.hpp"
#include "ergodec/functionals.hpp"
#include "ergodec/observables.hpp"
#include "ergodec/parallel.hpp"
#include "ergodec/rng.hpp"
#include "ergodec/serialize.hpp"
#include "ergodec/svg.hpp"

namespace ergodec {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Prepared {
    ExperimentConfig cfg;
    fs::path out;
};

Prepared prepare(const RunOptions& opt) {
    ExperimentConfig cfg = load_config(opt.config_path);
    if (const char* env = std::getenv("ERGODEC_SEED")) {
        try {
            cfg.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("ERGODEC_SEED: not an integer: ") + env);
        }
    }
    fs::path out(opt.out_dir);
    fs::create_directories(out);
    write_text_file((out / "config.json").string(), cfg.raw_text);
    return Prepared{std::move(cfg), std::move(out)};
}

template <typename F> int guarded(F&& body) {
    try {
        return body();
    } catch (const DecompositionFailedError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

void write_json(const fs::path& path, const ordered_json& j) {
    write_text_file(path.string(), j.dump(2) + "\n");
}

std::vector<std::string> family_labels(const TestFunctionFamily& fam) {
    std::vector<std::string> labels;
    labels.reserve(fam.size());
    for (std::size_t i = 0; i < fam.size(); ++i) labels.push_back(fam.entry(i).label());
    return labels;
}

// Expands the config's point requests into labeled points. Sample requests
// draw from the measure with seeds derived from the master seed.
std::vector<std::pair<std::string, PointState>> expand_points(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, PointState>> points;
    std::uint64_t sample_index = 0;
    for (const PointRequest& req : cfg.points) {
        switch (req.kind) {
        case PointRequest::Kind::Explicit:
            points.emplace_back(req.label, req.point);
            break;
        case PointRequest::Kind::Sample: {
            if (!cfg.measure) {
                throw ConfigError("config.points: sample entries need a measure");
            }
            for (std::uint64_t c = 0; c < req.count; ++c, ++sample_index) {
                points.emplace_back("sample[" + std::to_string(sample_index) + "]",
                                    sampler_draw(*cfg.measure, derive_seed(cfg.seed, sample_index)));
            }
            break;
        }
        case PointRequest::Kind::Witness:
            points.emplace_back(req.label, oscillating_witness(req.block_growth));
            break;
        }
    }
    return points;
}

ordered_json diagnostics_json(const ChoquetDiagnostics& dg) {
    ordered_json j;
    j["sample_count"] = dg.sample_count;
    j["converged"] = dg.converged;
    j["undecided"] = dg.undecided;
    j["not_converged"] = dg.not_converged;
    j["converged_frac"] = dg.converged_frac;
    j["undecided_frac"] = dg.undecided_frac;
    j["not_converged_frac"] = dg.not_converged_frac;
    j["cluster_eps"] = dg.cluster_eps;
    j["cauchy_eps"] = dg.cauchy_eps;
    j["max_cluster_diameter"] = dg.max_cluster_diameter;
    j["gap_statistic"] = dg.gap_statistic;
    j["min_atom_separation"] = dg.min_atom_separation;
    j["diffuse"] = dg.diffuse;
    return j;
}

ordered_json distribution_json(const ExperimentConfig& cfg,
                               const DiscreteChoquetDistribution& dist) {
    ordered_json j;
    j["command"] = "decompose";
    j["seed"] = cfg.seed;
    j["system"] = cfg.system.describe();
    j["family_id"] = dist.family_id;
    j["family_labels"] = family_labels(*cfg.family);
    j["diagnostics"] = diagnostics_json(dist.diagnostics);
    ordered_json atoms = ordered_json::array();
    for (const ChoquetAtom& atom : dist.atoms) {
        ordered_json a;
        a["weight"] = atom.weight;
        a["member_count"] = atom.member_count;
        a["center"] = atom.center.values;
        if (!atom.extra_means.empty()) a["extra_means"] = atom.extra_means;
        atoms.push_back(std::move(a));
    }
    j["atoms"] = std::move(atoms);
    ordered_json extras = ordered_json::array();
    for (const FnDescriptor& d : dist.extras) extras.push_back(d.label());
    j["extras"] = std::move(extras);
    return j;
}

std::string atoms_csv(const ExperimentConfig& cfg, const DiscreteChoquetDistribution& dist) {
    std::vector<std::string> header = {"atom", "weight", "member_count"};
    for (const std::string& label : family_labels(*cfg.family)) header.push_back(label);
    for (const FnDescriptor& d : dist.extras) header.push_back(d.label());
    CsvWriter csv(header);
    for (std::size_t k = 0; k < dist.atoms.size(); ++k) {
        const ChoquetAtom& atom = dist.atoms[k];
        std::vector<std::string> row = {std::to_string(k), format_real(atom.weight),
                                        std::to_string(atom.member_count)};
        for (double v : atom.center.values) row.push_back(format_real(v));
        for (double v : atom.extra_means) row.push_back(format_real(v));
        if (atom.extra_means.empty()) {
            for (std::size_t e = 0; e < dist.extras.size(); ++e) row.push_back("");
        }
        csv.row(row);
    }
    return csv.str();
}

void append_residual_rows(CsvWriter& csv, const ResidualReport& rep) {
    for (const ResidualEntry& e : rep.entries) {
        csv.row({rep.check, e.name, format_real(e.reference), format_real(e.estimate),
                 format_real(e.residual), format_real(e.tolerance), e.pass ? "1" : "0"});
    }
}

void append_affine_row(CsvWriter& csv, const AffineReport& rep) {
    csv.row({rep.check, "tau", format_real(rep.value_measure),
             format_real(rep.value_decomposition), format_real(rep.residual),
             format_real(rep.tolerance), rep.pass ? "1" : "0"});
}

DiscreteChoquetDistribution run_decomposition(const ExperimentConfig& cfg, unsigned threads) {
    if (!cfg.measure) throw ConfigError("config.measure: required for this command");
    if (cfg.sample_count == 0) throw ConfigError("config.sample_count: required, positive");
    return decompose(cfg.system, *cfg.measure, *cfg.family, cfg.detector, cfg.sample_count,
                     cfg.effective_cluster_eps(), cfg.seed, threads, cfg.borel_sets);
}

} // namespace

int run_classify(const RunOptions& opt) {
    return guarded([&]() {
        Prepared run = prepare(opt);
        const ExperimentConfig& cfg = run.cfg;
        const TestFunctionFamily& fam = *cfg.family;

        const auto points = expand_points(cfg);
        std::vector<ConvergenceVerdict> verdicts(points.size());
        parallel_for_index(points.size(), opt.threads, [&](std::uint64_t i) {
            verdicts[i] = classify_point(cfg.system, points[i].second, fam, cfg.detector);
        });

        std::optional<MomentVector> target;
        if (cfg.measure) target = measure_moments(*cfg.measure, fam);
        const double member_eps = cfg.detector.cauchy_eps + family_tail_bound(fam);

        std::vector<std::string> header = {"point",           "verdict", "achieved_eps",
                                           "osc_lower_bound", "n",       "ergodic",
                                           "in_basin",        "rho_reference"};
        for (const std::string& label : family_labels(fam)) header.push_back(label);
        CsvWriter csv(header);
        std::uint64_t converged = 0, undecided = 0, not_converged = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const ConvergenceVerdict& v = verdicts[i];
            switch (v.kind) {
            case VerdictKind::Converged: ++converged; break;
            case VerdictKind::Undecided: ++undecided; break;
            case VerdictKind::NotConverged: ++not_converged; break;
            }
            std::string ergodic, member, rho_ref;
            if (v.kind == VerdictKind::Converged) {
                ergodic = ergodic_label(cfg.system, v.limit, fam, 2.0 * cfg.detector.cauchy_eps) ==
                                  ErgodicLabel::Ergodic
                              ? "ergodic"
                              : "unknown";
            }
            if (target) {
                const double rho = weak_metric(v.limit, *target);
                rho_ref = format_real(rho);
                member = (v.kind == VerdictKind::Converged && rho <= member_eps) ? "1" : "0";
            }
            std::vector<std::string> row = {points[i].first,
                                            verdict_name(v.kind),
                                            format_real(v.achieved_eps),
                                            format_real(v.osc_lower_bound),
                                            std::to_string(v.limit.provenance.n),
                                            ergodic,
                                            member,
                                            rho_ref};
            for (double value : v.limit.values) row.push_back(format_real(value));
            csv.row(row);
        }
        write_text_file((run.out / "verdicts.csv").string(), csv.str());

        const double n = points.empty() ? 1.0 : static_cast<double>(points.size());
        ordered_json summary;
        summary["command"] = "classify";
        summary["seed"] = cfg.seed;
        summary["system"] = cfg.system.describe();
        summary["family_id"] = fam.id();
        summary["points"] = points.size();
        summary["converged"] = converged;
        summary["undecided"] = undecided;
        summary["not_converged"] = not_converged;
        summary["converged_frac"] = static_cast<double>(converged) / n;
        summary["undecided_frac"] = static_cast<double>(undecided) / n;
        summary["not_converged_frac"] = static_cast<double>(not_converged) / n;
        write_json(run.out / "summary.json", summary);

        if (opt.svg) {
            std::vector<std::string> labels;
            for (const auto& [label, point] : points) labels.push_back(label);
            write_text_file((run.out / "traces.svg").string(),
                            svg_trace_plot(labels, verdicts, "convergence traces"));
        }
        return 0;
    });
}

int run_decompose(const RunOptions& opt) {
    return guarded([&]() {
        Prepared run = prepare(opt);
        const ExperimentConfig& cfg = run.cfg;
        const DiscreteChoquetDistribution dist = run_decomposition(cfg, opt.threads);

        write_json(run.out / "distribution.json", distribution_json(cfg, dist));
        write_text_file((run.out / "atoms.csv").string(), atoms_csv(cfg, dist));

        ordered_json summary;
        summary["command"] = "decompose";
        summary["seed"] = cfg.seed;
        summary["system"] = cfg.system.describe();
        summary["measure"] = cfg.measure->describe();
        summary["atom_count"] = dist.atoms.size();
        summary["diffuse"] = dist.diagnostics.diffuse;
        summary["diagnostics"] = diagnostics_json(dist.diagnostics);
        write_json(run.out / "summary.json", summary);

        if (opt.svg && !dist.diagnostics.diffuse) {
            write_text_file((run.out / "weights.svg").string(),
                            svg_weight_histogram(dist, "atom weights"));
        }
        return 0;
    });
}

int run_verify(const RunOptions& opt) {
    return guarded([&]() {
        Prepared run = prepare(opt);
        const ExperimentConfig& cfg = run.cfg;
        const TestFunctionFamily& fam = *cfg.family;
        const DiscreteChoquetDistribution dist = run_decomposition(cfg, opt.threads);
        const MeasureSpec& target = cfg.reference_measure ? *cfg.reference_measure : *cfg.measure;

        CsvWriter csv({"check", "name", "reference", "estimate", "residual", "tolerance", "pass"});
        ordered_json checks = ordered_json::array();
        bool all_pass = true;
        const auto note = [&](const std::string& name, bool pass) {
            ordered_json c;
            c["check"] = name;
            c["pass"] = pass;
            checks.push_back(std::move(c));
            all_pass = all_pass && pass;
        };

        if (cfg.check_requested("barycenter_sampled")) {
            const ResidualReport rep = verify_barycenter_sampled_from(dist, target, fam);
            append_residual_rows(csv, rep);
            note(rep.check, rep.pass);
        }
        if (cfg.check_requested("barycenter_clustered") && !dist.diagnostics.diffuse) {
            const ResidualReport rep = verify_barycenter_clustered(dist, target, fam);
            append_residual_rows(csv, rep);
            note(rep.check, rep.pass);
        }
        if (cfg.check_requested("borel") && !cfg.borel_sets.empty()) {
            const ResidualReport rep = borel_extension_check(cfg.system, target, dist,
                                                             cfg.borel_sets);
            append_residual_rows(csv, rep);
            note(rep.check, rep.pass);
        }
        if (cfg.check_requested("affine_entropy") && cfg.system.symbolic() &&
            !dist.diagnostics.diffuse) {
            const AffineReport rep = verify_affine_decomposition(
                target, dist, fam, AffineFunctional::entropy_rate_functional(cfg.affine_block_len));
            append_affine_row(csv, rep);
            note(rep.check, rep.pass);
        }
        if (cfg.check_requested("affine_linear") && !cfg.affine_coefficients.empty() &&
            !dist.diagnostics.diffuse) {
            MomentVector coeffs{cfg.affine_coefficients, fam.id(),
                                Provenance{Provenance::Kind::ClosedForm, 0}};
            const AffineReport rep =
                verify_affine_decomposition(target, dist, fam, AffineFunctional::linear(coeffs));
            append_affine_row(csv, rep);
            note(rep.check, rep.pass);
        }

        write_text_file((run.out / "residuals.csv").string(), csv.str());
        write_json(run.out / "distribution.json", distribution_json(cfg, dist));

        ordered_json summary;
        summary["command"] = "verify";
        summary["seed"] = cfg.seed;
        summary["system"] = cfg.system.describe();
        summary["measure"] = cfg.measure->describe();
        summary["target"] = target.describe();
        summary["diffuse"] = dist.diagnostics.diffuse;
        summary["checks"] = std::move(checks);
        summary["pass"] = all_pass;
        write_json(run.out / "summary.json", summary);

        if (opt.svg && !dist.diagnostics.diffuse) {
            write_text_file((run.out / "weights.svg").string(),
                            svg_weight_histogram(dist, "atom weights"));
        }
        return all_pass ? 0 : 1;
    });
}

int run_witness(const RunOptions& opt) {
    return guarded([&]() {
        Prepared run = prepare(opt);
        const ExperimentConfig& cfg = run.cfg;
        const TestFunctionFamily& fam = *cfg.family;

        const PointState witness = oscillating_witness(cfg.witness_block_growth);
        const PointState shifted = step(cfg.system, witness);
        const ConvergenceVerdict at_witness = classify_point(cfg.system, witness, fam,
                                                             cfg.detector);
        const ConvergenceVerdict at_shifted = classify_point(cfg.system, shifted, fam,
                                                             cfg.detector);

        std::vector<std::string> header = {"point", "checkpoint", "n"};
        for (const std::string& label : family_labels(fam)) header.push_back(label);
        CsvWriter csv(header);
        const auto checkpoints = cfg.detector.checkpoints();
        const auto dump = [&](const std::string& name, const ConvergenceVerdict& v) {
            for (std::size_t t = 0; t < v.trace.size(); ++t) {
                std::vector<std::string> row = {name, std::to_string(t),
                                                std::to_string(checkpoints[t])};
                for (double value : v.trace[t].values) row.push_back(format_real(value));
                csv.row(row);
            }
        };
        dump("witness", at_witness);
        dump("shifted", at_shifted);
        write_text_file((run.out / "witness.csv").string(), csv.str());

        const bool pass = at_witness.kind == VerdictKind::NotConverged &&
                          at_shifted.kind == VerdictKind::NotConverged;
        ordered_json summary;
        summary["command"] = "witness";
        summary["seed"] = cfg.seed;
        summary["system"] = cfg.system.describe();
        summary["block_growth"] = cfg.witness_block_growth;
        summary["witness_verdict"] = verdict_name(at_witness.kind);
        summary["witness_osc_lower_bound"] = at_witness.osc_lower_bound;
        summary["shifted_verdict"] = verdict_name(at_shifted.kind);
        summary["shifted_osc_lower_bound"] = at_shifted.osc_lower_bound;
        summary["not_converged"] = (at_witness.kind == VerdictKind::NotConverged ? 1 : 0) +
                                   (at_shifted.kind == VerdictKind::NotConverged ? 1 : 0);
        summary["pass"] = pass;
        write_json(run.out / "summary.json", summary);

        if (opt.svg) {
            write_text_file((run.out / "traces.svg").string(),
                            svg_trace_plot({"witness", "shifted"}, {at_witness, at_shifted},
                                           "witness traces"));
        }
        return pass ? 0 : 1;
    });
}

} // namespace ergodec
