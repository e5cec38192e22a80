#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>

#include "affectfeed/analysis.hpp"
#include "affectfeed/care.hpp"
#include "affectfeed/corpus.hpp"
#include "affectfeed/dataset.hpp"
#include "affectfeed/error.hpp"
#include "affectfeed/io_util.hpp"
#include "affectfeed/model.hpp"
#include "affectfeed/random.hpp"
#include "affectfeed/ranker.hpp"
#include "affectfeed/synth.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace affectfeed;

namespace {

void write_run_config(const CLI::App& sub, const fs::path& out_dir) {
    json j;
    j["subcommand"] = sub.get_name();
    json opts = json::object();
    for (const auto* opt : sub.get_options()) {
        const auto& name = opt->get_name();
        if (name == "--help") continue;
        const auto& results = opt->results();
        if (!results.empty()) {
            opts[name] = results.size() == 1 ? json(results.front()) : json(results);
        } else {
            opts[name] = opt->get_default_str();
        }
    }
    j["options"] = opts;
    write_file_atomic(out_dir / "run_config.json", j.dump(2) + "\n");
}

fs::path prepare(const fs::path& dir) {
    fs::create_directories(dir);
    return dir;
}

care::Seeds load_seeds(const std::string& patterns, const std::string& lexicon) {
    care::Seeds s = care::default_seeds();
    if (!patterns.empty()) s.patterns = care::read_patterns(patterns);
    if (!lexicon.empty()) s.lexicon = care::read_lexicon(lexicon);
    return s;
}

std::string optional_csv(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

model::ModelConfig model_config(const Corpus& corpus, const dataset::ClassSpace& classes, std::size_t hash_dim,
                                std::size_t embed_dim, std::uint64_t seed) {
    model::ModelConfig c;
    c.content.hash_dim = c.user.hash_dim = hash_dim;
    c.content.embed_dim = c.user.embed_dim = embed_dim;
    c.dense_dim = corpus.dense_dim();
    c.network_dim = corpus.network_dim();
    c.n_classes = classes.size();
    c.seed = seed;
    return c;
}

dataset::ClassSpace classes_for(const model::TwoTowerModel& m) {
    return dataset::ClassSpace::standard(m.config.n_classes == dataset::ClassSpace::standard(true).size());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"affectfeed: affective-response labeling, training and feed ranking"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with planted ground truth");
    std::uint64_t seed = 0;
    synth::SynthConfig scfg;
    std::string out;
    synth_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    synth_cmd->add_option("--posts", scfg.n_posts, "Number of posts")->capture_default_str();
    synth_cmd->add_option("--users", scfg.n_users, "Number of users")->capture_default_str();
    synth_cmd->add_option("--comments-per-post", scfg.comments_per_post)->capture_default_str();
    synth_cmd->add_option("--annotation-rate", scfg.annotation_rate, "Share of posts sent to raters")
        ->capture_default_str();
    synth_cmd->add_option("--surveys-per-post", scfg.surveys_per_post)->capture_default_str();
    synth_cmd->add_option("--out", out, "Output directory")->required();

    // care-label
    auto* label_cmd = app.add_subcommand("care-label", "Label posts from their comments with patterns and a lexicon");
    std::string corpus_dir, patterns_file, lexicon_file;
    std::size_t min_support = 2;
    label_cmd->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
    label_cmd->add_option("--patterns", patterns_file, "Pattern TSV (default: built-in seeds)")
        ->check(CLI::ExistingFile);
    label_cmd->add_option("--lexicon", lexicon_file, "Lexicon TSV (default: built-in seeds)")
        ->check(CLI::ExistingFile);
    label_cmd->add_option("--min-support", min_support, "Comments needed per affect")->capture_default_str();
    label_cmd->add_option("--out", out)->required();

    // care-expand
    auto* expand_cmd = app.add_subcommand("care-expand", "Bootstrap new patterns and keywords from unmatched comments");
    care::CareParams cparams;
    care::StopRule stop;
    expand_cmd->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
    expand_cmd->add_option("--patterns", patterns_file)->check(CLI::ExistingFile);
    expand_cmd->add_option("--lexicon", lexicon_file)->check(CLI::ExistingFile);
    expand_cmd->add_option("--min-support", cparams.min_support)->capture_default_str();
    expand_cmd->add_option("--n-max", cparams.n_max, "Longest n-gram mined")->capture_default_str();
    expand_cmd->add_option("--min-freq", cparams.thresholds.min_freq)->capture_default_str();
    expand_cmd->add_option("--min-classes", cparams.thresholds.min_classes_for_pattern)->capture_default_str();
    expand_cmd->add_option("--purity", cparams.thresholds.purity_for_keyword)->capture_default_str();
    expand_cmd->add_option("--min-pattern-tokens", cparams.thresholds.min_pattern_tokens)->capture_default_str();
    expand_cmd->add_option("--iterations", stop.max_iters, "Maximum expansion passes")->capture_default_str();
    std::size_t target_labels = 0;
    expand_cmd->add_option("--target-labels", target_labels, "Stop once this many labels exist (0: off)")
        ->capture_default_str();
    expand_cmd->add_option("--out", out)->required();

    // build-dataset
    auto* build_cmd = app.add_subcommand("build-dataset", "Assemble the 80/10/10 multi-label training set");
    dataset::BuildParams bparams;
    std::string care_labels_file;
    std::int64_t as_of = -1;
    build_cmd->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
    build_cmd->add_option("--care-labels", care_labels_file, "labels.jsonl from care-label/care-expand")
        ->check(CLI::ExistingFile);
    build_cmd->add_option("--per-class-n", bparams.per_class_n)->capture_default_str();
    build_cmd->add_option("--consensus-k", bparams.consensus_k)->capture_default_str();
    build_cmd->add_option("--window-days", bparams.window_days)->capture_default_str();
    build_cmd->add_option("--as-of", as_of, "Label cut-off timestamp (default: newest record)")
        ->capture_default_str();
    build_cmd->add_flag("--include-snooze", bparams.include_snooze);
    build_cmd->add_option("--seed", seed)->capture_default_str();
    build_cmd->add_option("--out", out)->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the two-tower model");
    std::string dataset_file;
    model::TrainConfig tcfg;
    std::size_t hash_dim = model::TowerConfig{}.hash_dim;
    std::size_t embed_dim = model::TowerConfig{}.embed_dim;
    train_cmd->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
    train_cmd->add_option("--dataset", dataset_file)->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--epochs", tcfg.epochs)->capture_default_str();
    train_cmd->add_option("--lr", tcfg.learning_rate)->capture_default_str();
    train_cmd->add_option("--batch-size", tcfg.batch_size)->capture_default_str();
    train_cmd->add_option("--hash-dim", hash_dim)->capture_default_str();
    train_cmd->add_option("--embed-dim", embed_dim)->capture_default_str();
    train_cmd->add_option("--seed", seed)->capture_default_str();
    train_cmd->add_option("--out", out)->required();

    // grad-check
    auto* grad_cmd = app.add_subcommand("grad-check", "Compare analytic gradients with finite differences");
    std::string checkpoint;
    std::size_t batch = 8;
    model::GradCheckOptions gopts;
    double grad_tolerance = 1e-4;
    grad_cmd->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
    grad_cmd->add_option("--dataset", dataset_file)->required()->check(CLI::ExistingFile);
    grad_cmd->add_option("--checkpoint", checkpoint, "Model to check (default: fresh initialization)")
        ->check(CLI::ExistingFile);
    grad_cmd->add_option("--batch", batch)->capture_default_str();
    grad_cmd->add_option("--epsilon", gopts.epsilon)->capture_default_str()->check(CLI::Range(1e-6, 1e-3));
    grad_cmd->add_option("--samples", gopts.samples_per_tensor, "Parameters sampled per tensor")
        ->capture_default_str();
    grad_cmd->add_option("--tolerance", grad_tolerance, "Largest relative error that passes")->capture_default_str();
    grad_cmd->add_option("--hash-dim", hash_dim)->capture_default_str();
    grad_cmd->add_option("--embed-dim", embed_dim)->capture_default_str();
    grad_cmd->add_option("--seed", seed)->capture_default_str();
    grad_cmd->add_option("--out", out)->required();

    // export-embedding
    auto* export_cmd = app.add_subcommand("export-embedding", "Write the 32-length content embedding of every post");
    export_cmd->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
    export_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    export_cmd->add_option("--out", out)->required();

    // rank
    auto* rank_cmd = app.add_subcommand("rank", "Run the feed pipeline for a set of users");
    std::string pipeline_file, surveys_file, embedding_file;
    std::vector<std::string> user_ids;
    std::size_t n_users = 5;
    std::int64_t at = -1;
    rank_cmd->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
    rank_cmd->add_option("--pipeline", pipeline_file)->required()->check(CLI::ExistingFile);
    rank_cmd->add_option("--checkpoint", checkpoint, "Needed for the engagement_model predictor")
        ->check(CLI::ExistingFile);
    rank_cmd->add_option("--surveys", surveys_file, "Needed for the survey_model predictor")
        ->check(CLI::ExistingFile);
    rank_cmd->add_option("--embedding", embedding_file, "Adds the embedding block to the survey scorer")
        ->check(CLI::ExistingFile);
    rank_cmd->add_option("--user", user_ids, "User to rank for (repeatable)");
    rank_cmd->add_option("--users", n_users, "Without --user: rank for the first N users")->capture_default_str();
    rank_cmd->add_option("--at", at, "Request time (default: newest record)")->capture_default_str();
    rank_cmd->add_option("--seed", seed)->capture_default_str();
    rank_cmd->add_option("--out", out)->required();

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "Survey-scorer AUC with and without the content embedding");
    ranker::SurveyScorerConfig scorer_cfg;
    ablate_cmd->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
    ablate_cmd->add_option("--surveys", surveys_file)->required()->check(CLI::ExistingFile);
    ablate_cmd->add_option("--embedding", embedding_file)->required()->check(CLI::ExistingFile);
    ablate_cmd->add_option("--iterations", scorer_cfg.iterations)->capture_default_str();
    ablate_cmd->add_option("--lr", scorer_cfg.learning_rate)->capture_default_str();
    ablate_cmd->add_option("--seed", seed)->capture_default_str();
    ablate_cmd->add_option("--out", out)->required();

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "Rater agreement, correlation matrices and CARE agreement");
    std::string feelings_file;
    std::size_t feeling_floor = 10;
    std::size_t analysis_k = 1;
    analyze_cmd->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
    analyze_cmd->add_option("--care-labels", care_labels_file)->check(CLI::ExistingFile);
    analyze_cmd->add_option("--feelings", feelings_file)->check(CLI::ExistingFile);
    analyze_cmd->add_option("--feeling-floor", feeling_floor, "Drop feelings seen fewer times")->capture_default_str();
    analyze_cmd->add_option("--consensus-k", analysis_k, "Raters needed for an affect in the matrices")
        ->capture_default_str();
    analyze_cmd->add_option("--out", out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) {
            auto dir = prepare(out);
            auto result = synth::synth_corpus(seed, scfg);
            synth::write_output(result, dir);
            write_run_config(*synth_cmd, dir);
            std::cout << "posts " << result.corpus.posts().size() << ", comments " << result.corpus.comments().size()
                      << ", events " << result.corpus.events().size() << ", annotations "
                      << result.corpus.annotations().size() << ", surveys " << result.surveys.size() << "\n";
        } else if (label_cmd->parsed()) {
            auto dir = prepare(out);
            auto corpus = load_corpus(fs::path(corpus_dir));
            auto seeds = load_seeds(patterns_file, lexicon_file);
            auto labels = care::label_corpus(corpus, seeds.patterns, seeds.lexicon, min_support);
            write_file_atomic(dir / "labels.jsonl", care::labels_to_jsonl(corpus, labels));
            write_run_config(*label_cmd, dir);
            std::size_t n = 0;
            for (const auto& l : labels) n += l.empty() ? 0 : 1;
            std::cout << "labeled " << n << " of " << labels.size() << " posts\n";
        } else if (expand_cmd->parsed()) {
            auto dir = prepare(out);
            auto corpus = load_corpus(fs::path(corpus_dir));
            if (target_labels > 0) stop.target_labels = target_labels;
            auto run = care::run_care(corpus, load_seeds(patterns_file, lexicon_file), cparams, stop);
            write_file_atomic(dir / "patterns.tsv", care::patterns_to_text(run.patterns));
            write_file_atomic(dir / "lexicon.tsv", care::lexicon_to_text(run.lexicon));
            write_file_atomic(dir / "changelog.jsonl", care::changelog_to_jsonl(run.changelog));
            write_file_atomic(dir / "labels.jsonl", care::labels_to_jsonl(corpus, run.labels));
            std::string report =
                "iteration,patterns,keywords,labeled_posts,labels,added_patterns,added_keywords,conflicts\n";
            for (const auto& r : run.reports) {
                report += std::to_string(r.iteration) + "," + std::to_string(r.patterns) + "," +
                          std::to_string(r.keywords) + "," + std::to_string(r.labeled_posts) + "," +
                          std::to_string(r.labels) + "," + std::to_string(r.added_patterns) + "," +
                          std::to_string(r.added_keywords) + "," + std::to_string(r.conflicts) + "\n";
            }
            write_file_atomic(dir / "iterations.csv", report);
            write_run_config(*expand_cmd, dir);
            std::cout << report;
        } else if (build_cmd->parsed()) {
            auto dir = prepare(out);
            auto corpus = load_corpus(fs::path(corpus_dir));
            std::map<std::string, AffectSet> care_labels;
            if (!care_labels_file.empty()) care_labels = care::read_labels(care_labels_file);
            if (as_of >= 0) bparams.as_of = as_of;
            bparams.seed = seed;
            auto built = dataset::build_dataset(corpus, care_labels, bparams);
            write_file_atomic(dir / "dataset.jsonl", dataset::dataset_to_jsonl(built.split, built.classes));
            write_file_atomic(dir / "summary.csv", dataset::summary_csv(built.split, built.classes));
            std::string warnings;
            for (const auto& w : built.split.warnings) warnings += w + "\n";
            write_file_atomic(dir / "warnings.txt", warnings);
            write_run_config(*build_cmd, dir);
            std::cout << "train " << built.split.train.size() << ", validation " << built.split.validation.size()
                      << ", test " << built.split.test.size() << ", warnings " << built.split.warnings.size()
                      << "\n";
        } else if (train_cmd->parsed()) {
            auto dir = prepare(out);
            auto corpus = load_corpus(fs::path(corpus_dir));
            auto [split, classes] = dataset::read_dataset(dataset_file);
            auto mcfg = model_config(corpus, classes, hash_dim, embed_dim, seed);
            tcfg.seed = seed;
            auto tr = model::make_examples(corpus, split.train, mcfg);
            auto va = model::make_examples(corpus, split.validation, mcfg);
            auto te = model::make_examples(corpus, split.test, mcfg);
            auto result = model::train(model::TwoTowerModel::initialize(mcfg), tr, va, tcfg);
            model::save_checkpoint(result.model, dir / "model.ckpt");
            std::string metrics = "epoch,train_loss,validation_loss\n";
            for (const auto& e : result.epochs) {
                metrics += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
                           optional_csv(e.validation_loss) + "\n";
            }
            write_file_atomic(dir / "metrics.csv", metrics);
            std::string auc = "class,test_auc\n";
            auto aucs = model::per_class_auc(result.model, te);
            for (std::size_t c = 0; c < aucs.size(); ++c) auc += classes.name(c) + "," + optional_csv(aucs[c]) + "\n";
            write_file_atomic(dir / "test_auc.csv", auc);
            write_run_config(*train_cmd, dir);
            std::cout << metrics << auc;
        } else if (grad_cmd->parsed()) {
            auto dir = prepare(out);
            auto corpus = load_corpus(fs::path(corpus_dir));
            auto [split, classes] = dataset::read_dataset(dataset_file);
            auto m = checkpoint.empty()
                         ? model::TwoTowerModel::initialize(model_config(corpus, classes, hash_dim, embed_dim, seed))
                         : model::load_checkpoint(checkpoint);
            if (split.train.empty()) throw Error(ErrorKind::InvalidArgument, "dataset has no training rows");
            std::vector<dataset::LabeledExample> rows;
            Rng rng(seed);
            for (std::size_t i = 0; i < batch; ++i) rows.push_back(split.train[rng.below(split.train.size())]);
            auto examples = model::make_examples(corpus, rows, m.config);
            gopts.seed = seed;
            auto report = model::grad_check(m, examples, gopts);
            json j;
            j["max_relative_error"] = report.max_relative_error;
            j["worst_parameter"] = report.worst_parameter;
            j["checked"] = report.checked;
            j["tolerance"] = grad_tolerance;
            j["passed"] = report.max_relative_error < grad_tolerance;
            write_file_atomic(dir / "grad_check.json", j.dump(2) + "\n");
            write_run_config(*grad_cmd, dir);
            std::cout << j.dump(2) << "\n";
            if (report.max_relative_error >= grad_tolerance) return 2;
        } else if (export_cmd->parsed()) {
            auto dir = prepare(out);
            auto corpus = load_corpus(fs::path(corpus_dir));
            auto m = model::load_checkpoint(checkpoint);
            auto table = model::export_embedding(m, corpus.posts());
            write_file_atomic(dir / "embedding.csv", model::embedding_to_csv(table));
            write_run_config(*export_cmd, dir);
            std::cout << "exported " << table.size() << " rows\n";
        } else if (rank_cmd->parsed()) {
            auto dir = prepare(out);
            auto corpus = load_corpus(fs::path(corpus_dir));
            auto pf = ranker::read_pipeline_file(pipeline_file);
            ranker::FeedContext ctx(corpus);
            ctx.recency_scale = pf.recency_scale_hours * 3600.0;
            ranker::PipelineConfig pc;
            pc.k = pf.k;
            pc.diversity = pf.diversity;
            for (const auto& [name, w] : pf.weights) {
                switch (*ranker::parse_predictor_kind(name)) {
                    case ranker::PredictorKind::Recency: pc.predictors.push_back(ranker::recency_predictor(ctx)); break;
                    case ranker::PredictorKind::FriendEngagement:
                        pc.predictors.push_back(ranker::friend_predictor(ctx));
                        break;
                    case ranker::PredictorKind::EngagementModel: {
                        if (checkpoint.empty()) {
                            throw Error(ErrorKind::InvalidArgument, "engagement_model weight needs --checkpoint");
                        }
                        auto m = std::make_shared<const model::TwoTowerModel>(model::load_checkpoint(checkpoint));
                        pc.predictors.push_back(ranker::engagement_predictor(m, classes_for(*m)));
                        break;
                    }
                    case ranker::PredictorKind::SurveyModel: {
                        if (surveys_file.empty()) {
                            throw Error(ErrorKind::InvalidArgument, "survey_model weight needs --surveys");
                        }
                        auto surveys = synth::read_surveys(surveys_file);
                        std::shared_ptr<const model::EmbeddingTable> emb;
                        if (!embedding_file.empty()) {
                            emb = std::make_shared<const model::EmbeddingTable>(
                                model::read_embedding_csv(embedding_file));
                        }
                        auto data = ranker::survey_features(corpus, surveys, emb.get(), seed);
                        auto scorer = std::make_shared<const ranker::SurveyScorer>(ranker::train_survey_scorer(data));
                        pc.predictors.push_back(ranker::survey_predictor(scorer, emb));
                        break;
                    }
                }
                pc.weights.push_back(w);
            }
            const std::int64_t when = at >= 0 ? at : corpus.max_timestamp();
            if (user_ids.empty()) {
                for (std::size_t i = 0; i < std::min(n_users, corpus.users().size()); ++i) {
                    user_ids.push_back(corpus.users()[i].id);
                }
            }
            std::vector<std::string> pool;
            for (const auto& p : corpus.posts()) {
                if (p.created_at <= when) pool.push_back(p.id);
            }
            std::string feed;
            for (const auto& u : user_ids) {
                auto result = ranker::run_feed(ctx, {u, when, pool}, pc);
                feed += ranker::feed_result_to_json(result) + "\n";
                std::cout << u << ": " << result.posts.size() << " posts, " << result.removed_by_filter.size()
                          << " removed by the integrity filter\n";
            }
            write_file_atomic(dir / "feed.jsonl", feed);
            write_run_config(*rank_cmd, dir);
        } else if (ablate_cmd->parsed()) {
            auto dir = prepare(out);
            auto corpus = load_corpus(fs::path(corpus_dir));
            auto surveys = synth::read_surveys(surveys_file);
            auto emb = model::read_embedding_csv(embedding_file);
            auto r = ranker::ablate(corpus, surveys, emb, seed, scorer_cfg);
            json j;
            j["base_auc"] = r.base_auc;
            j["new_auc"] = r.new_auc;
            j["loss_reduction_percent"] = r.loss_reduction;
            write_file_atomic(dir / "ablation.json", j.dump(2) + "\n");
            std::string imp = "feature,abs_weight\n";
            for (const auto& [name, w] : r.importance) imp += name + "," + format_double(w) + "\n";
            write_file_atomic(dir / "importance.csv", imp);
            write_run_config(*ablate_cmd, dir);
            std::cout << "base AUC " << r.base_auc << "\nnew AUC " << r.new_auc << "\nloss reduction "
                      << r.loss_reduction << "%\n";
        } else if (analyze_cmd->parsed()) {
            auto dir = prepare(out);
            auto corpus = load_corpus(fs::path(corpus_dir));
            const auto annotations = corpus.annotations();
            if (annotations.empty()) throw Error(ErrorKind::InvalidArgument, "corpus has no annotations");
            auto ir = analysis::interrater_correlation(analysis::rater_matrix(annotations));
            json j;
            j["mean"] = ir.mean;
            j["raters"] = ir.per_rater.size();
            j["excluded"] = ir.excluded;
            write_file_atomic(dir / "interrater.json", j.dump(2) + "\n");
            auto human = analysis::consensus_table(annotations, analysis_k);
            write_file_atomic(dir / "affect_affect.csv", analysis::pearson_matrix(human, human).to_csv());
            write_file_atomic(dir / "affect_engagement.csv",
                              analysis::pearson_matrix(human, analysis::engagement_table(corpus)).to_csv());
            if (!feelings_file.empty()) {
                auto feelings = synth::read_feelings(feelings_file);
                write_file_atomic(dir / "affect_feeling.csv",
                                  analysis::pearson_matrix(human, analysis::feeling_table(feelings, feeling_floor))
                                      .to_csv());
            }
            if (!care_labels_file.empty()) {
                auto thresholds = analysis::default_thresholds();
                auto rows = analysis::care_agreement(annotations, care::read_labels(care_labels_file), thresholds);
                write_file_atomic(dir / "care_agreement.csv", analysis::agreement_to_csv(rows));
                std::cout << analysis::agreement_to_csv(rows);
            }
            auto stats = analysis::annotation_stats(annotations);
            write_file_atomic(dir / "annotation_stats.csv", analysis::annotation_stats_to_csv(stats));
            write_run_config(*analyze_cmd, dir);
            std::cout << "interrater correlation " << ir.mean << " over " << ir.per_rater.size() << " raters\n"
                      << "mean selections per rater-post " << stats.mean_selections << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error[" << e.kind_name() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error[IoError]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
