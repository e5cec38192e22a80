#include "affectfeed/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "affectfeed/error.hpp"
#include "affectfeed/io_util.hpp"
#include "affectfeed/metrics.hpp"
#include "affectfeed/random.hpp"
#include "affectfeed/text.hpp"

namespace affectfeed::model {

namespace {

constexpr std::string_view kMagic = "affectfeed-two-tower";
constexpr int kFormatVersion = 1;

Layer make_layer(std::size_t in, std::size_t out) {
    return Layer{in, out, std::vector<double>(in * out, 0.0), std::vector<double>(out, 0.0)};
}

Tower make_tower(const TowerConfig& cfg, std::size_t dense_dim) {
    Tower t;
    t.hash_dim = cfg.hash_dim;
    t.embed_dim = cfg.embed_dim;
    t.embedding.assign(cfg.hash_dim * cfg.embed_dim, 0.0);
    std::size_t in = cfg.embed_dim + dense_dim;
    for (auto h : cfg.mlp_hidden) {
        t.layers.push_back(make_layer(in, h));
        in = h;
    }
    t.layers.push_back(make_layer(in, cfg.output_dim));
    return t;
}

void fill_uniform(std::vector<double>& v, double r, Rng& rng) {
    for (auto& x : v) x = rng.uniform(-r, r);
}

void init_layers(std::vector<Layer>& layers, Rng& rng) {
    for (auto& l : layers) fill_uniform(l.w, 1.0 / std::sqrt(static_cast<double>(l.in)), rng);
}

void layer_forward(const Layer& l, std::span<const double> x, std::vector<double>& out, bool relu) {
    out.assign(l.b.begin(), l.b.end());
    for (std::size_t o = 0; o < l.out; ++o) {
        const double* row = l.w.data() + o * l.in;
        double s = out[o];
        for (std::size_t i = 0; i < l.in; ++i) s += row[i] * x[i];
        out[o] = relu ? std::max(0.0, s) : s;
    }
}

// acts[0] is the input; acts[k + 1] is the output of layer k.
void mlp_forward(const std::vector<Layer>& layers, std::vector<std::vector<double>>& acts) {
    acts.resize(layers.size() + 1);
    for (std::size_t k = 0; k < layers.size(); ++k) {
        layer_forward(layers[k], acts[k], acts[k + 1], k + 1 < layers.size());
    }
}

// d_out is the gradient with respect to the last layer's (linear) output;
// returns the gradient with respect to acts[0].
std::vector<double> mlp_backward(const std::vector<Layer>& layers, const std::vector<std::vector<double>>& acts,
                                 std::vector<double> d_out, std::vector<Layer>& grads) {
    for (std::size_t k = layers.size(); k-- > 0;) {
        const Layer& l = layers[k];
        Layer& g = grads[k];
        if (k + 1 < layers.size()) {
            for (std::size_t o = 0; o < l.out; ++o) {
                if (acts[k + 1][o] <= 0.0) d_out[o] = 0.0;
            }
        }
        const auto& x = acts[k];
        std::vector<double> d_in(l.in, 0.0);
        for (std::size_t o = 0; o < l.out; ++o) {
            const double d = d_out[o];
            if (d == 0.0) continue;
            g.b[o] += d;
            const double* row = l.w.data() + o * l.in;
            double* grow = g.w.data() + o * l.in;
            for (std::size_t i = 0; i < l.in; ++i) {
                grow[i] += d * x[i];
                d_in[i] += d * row[i];
            }
        }
        d_out = std::move(d_in);
    }
    return d_out;
}

struct TowerPass {
    std::vector<std::vector<double>> acts;
};

void tower_forward(const Tower& t, const TowerInput& in, TowerPass& pass) {
    pass.acts.resize(t.layers.size() + 1);
    auto& x = pass.acts[0];
    x.assign(t.embed_dim + in.dense.size(), 0.0);
    if (!in.buckets.empty()) {
        for (auto b : in.buckets) {
            const double* row = t.embedding.data() + static_cast<std::size_t>(b) * t.embed_dim;
            for (std::size_t d = 0; d < t.embed_dim; ++d) x[d] += row[d];
        }
        const double inv = 1.0 / static_cast<double>(in.buckets.size());
        for (std::size_t d = 0; d < t.embed_dim; ++d) x[d] *= inv;
    }
    std::copy(in.dense.begin(), in.dense.end(), x.begin() + static_cast<std::ptrdiff_t>(t.embed_dim));
    mlp_forward(t.layers, pass.acts);
}

void tower_backward(const Tower& t, const TowerInput& in, const TowerPass& pass, std::vector<double> d_out,
                    Tower& grad) {
    auto d_x = mlp_backward(t.layers, pass.acts, std::move(d_out), grad.layers);
    if (in.buckets.empty()) return;
    const double inv = 1.0 / static_cast<double>(in.buckets.size());
    for (auto b : in.buckets) {
        double* row = grad.embedding.data() + static_cast<std::size_t>(b) * t.embed_dim;
        for (std::size_t d = 0; d < t.embed_dim; ++d) row[d] += d_x[d] * inv;
    }
}

struct ForwardPass {
    TowerPass content;
    TowerPass user;
    std::vector<std::vector<double>> fusion;
};

const std::vector<double>& forward(const TwoTowerModel& m, const TowerInput& c, const TowerInput& u,
                                   ForwardPass& pass) {
    tower_forward(m.content, c, pass.content);
    tower_forward(m.user, u, pass.user);
    pass.fusion.resize(m.fusion.size() + 1);
    auto& z = pass.fusion[0];
    const auto& co = pass.content.acts.back();
    const auto& uo = pass.user.acts.back();
    z.assign(co.begin(), co.end());
    z.insert(z.end(), uo.begin(), uo.end());
    mlp_forward(m.fusion, pass.fusion);
    return pass.fusion.back();
}

void check_dim(const std::vector<double>& v, std::size_t want, const std::string& what) {
    if (v.size() != want) {
        throw Error(ErrorKind::InvalidArgument,
                    what + " has " + std::to_string(v.size()) + " values, model expects " + std::to_string(want));
    }
}

void add_bucket(TowerInput& in, std::string_view token, std::size_t hash_dim) {
    in.buckets.push_back(static_cast<std::uint32_t>(fnv1a(token) % hash_dim));
}

void append_tower_tensors(const std::string& prefix, Tower& t,
                          std::vector<std::pair<std::string, std::span<double>>>& out) {
    out.emplace_back(prefix + ".embedding", t.embedding);
    for (std::size_t k = 0; k < t.layers.size(); ++k) {
        out.emplace_back(prefix + ".layer" + std::to_string(k) + ".w", t.layers[k].w);
        out.emplace_back(prefix + ".layer" + std::to_string(k) + ".b", t.layers[k].b);
    }
}

std::string join_dims(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s.empty() ? "-" : s;
}

std::vector<std::size_t> parse_dims(const std::string& s) {
    std::vector<std::size_t> out;
    if (s == "-") return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
    return out;
}

}  // namespace

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* what) {
        if (v == 0) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be >= 1");
    };
    for (const auto* t : {&content, &user}) {
        positive(t->hash_dim, "hash_dim");
        positive(t->embed_dim, "embed_dim");
        positive(t->output_dim, "output_dim");
        for (auto h : t->mlp_hidden) positive(h, "mlp_hidden");
    }
    for (auto h : fusion_hidden) positive(h, "fusion_hidden");
    positive(n_classes, "n_classes");
    if (content.hash_dim > (std::size_t{1} << 32) || user.hash_dim > (std::size_t{1} << 32)) {
        throw Error(ErrorKind::InvalidArgument, "hash_dim too large");
    }
}

TwoTowerModel TwoTowerModel::zeros(const ModelConfig& config) {
    config.validate();
    TwoTowerModel m;
    m.config = config;
    m.content = make_tower(config.content, config.dense_dim);
    m.user = make_tower(config.user, config.network_dim);
    std::size_t in = config.content.output_dim + config.user.output_dim;
    for (auto h : config.fusion_hidden) {
        m.fusion.push_back(make_layer(in, h));
        in = h;
    }
    m.fusion.push_back(make_layer(in, config.n_classes));
    return m;
}

TwoTowerModel TwoTowerModel::initialize(const ModelConfig& config) {
    TwoTowerModel m = zeros(config);
    Rng rng(config.seed);
    for (Tower* t : {&m.content, &m.user}) {
        fill_uniform(t->embedding, 1.0, rng);
        init_layers(t->layers, rng);
    }
    init_layers(m.fusion, rng);
    return m;
}

std::vector<std::pair<std::string, std::span<double>>> TwoTowerModel::tensors() {
    std::vector<std::pair<std::string, std::span<double>>> out;
    append_tower_tensors("content", content, out);
    append_tower_tensors("user", user, out);
    for (std::size_t k = 0; k < fusion.size(); ++k) {
        out.emplace_back("fusion.layer" + std::to_string(k) + ".w", fusion[k].w);
        out.emplace_back("fusion.layer" + std::to_string(k) + ".b", fusion[k].b);
    }
    return out;
}

std::vector<std::pair<std::string, std::span<const double>>> TwoTowerModel::tensors() const {
    auto mutable_view = const_cast<TwoTowerModel*>(this)->tensors();
    std::vector<std::pair<std::string, std::span<const double>>> out;
    for (auto& [name, span] : mutable_view) out.emplace_back(std::move(name), span);
    return out;
}

std::size_t TwoTowerModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors()) n += t.size();
    return n;
}

bool TwoTowerModel::all_finite() const {
    for (const auto& [name, t] : tensors()) {
        for (double v : t) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

bool operator==(const TwoTowerModel& a, const TwoTowerModel& b) {
    auto ta = a.tensors();
    auto tb = b.tensors();
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i].first != tb[i].first || !std::equal(ta[i].second.begin(), ta[i].second.end(),
                                                      tb[i].second.begin(), tb[i].second.end())) {
            return false;
        }
    }
    return true;
}

TowerInput content_input(const Post& post, const ModelConfig& config) {
    TowerInput in;
    for (const auto* text : {&post.title, &post.body}) {
        for (const auto& tok : tokenize(*text)) add_bucket(in, tok, config.content.hash_dim);
    }
    if (post.ocr_text) {
        for (const auto& tok : tokenize(*post.ocr_text)) add_bucket(in, tok, config.content.hash_dim);
    }
    check_dim(post.dense_features, config.dense_dim, "post " + post.id + " dense_features");
    in.dense = post.dense_features;
    return in;
}

TowerInput user_input(const User& user, const ModelConfig& config) {
    TowerInput in;
    for (const auto& tok : tokenize(user.bio_text)) add_bucket(in, tok, config.user.hash_dim);
    for (const auto& tag : user.interests) add_bucket(in, "interest:" + tag, config.user.hash_dim);
    check_dim(user.network_stats, config.network_dim, "user " + user.id + " network_stats");
    in.dense = user.network_stats;
    return in;
}

std::vector<TrainingExample> make_examples(const Corpus& corpus, std::span<const dataset::LabeledExample> rows,
                                           const ModelConfig& config) {
    std::vector<std::optional<TowerInput>> posts(corpus.posts().size());
    std::vector<std::optional<TowerInput>> users(corpus.users().size());
    std::vector<TrainingExample> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        auto pi = corpus.post_index(r.post_id);
        auto ui = corpus.user_index(r.user_id);
        if (!pi) throw Error(ErrorKind::DanglingReference, "dataset row names unknown post " + r.post_id);
        if (!ui) throw Error(ErrorKind::DanglingReference, "dataset row names unknown user " + r.user_id);
        if (!posts[*pi]) posts[*pi] = content_input(corpus.posts()[*pi], config);
        if (!users[*ui]) users[*ui] = user_input(corpus.users()[*ui], config);
        out.push_back({*posts[*pi], *users[*ui], r.labels});
    }
    return out;
}

std::vector<double> encode_content(const TwoTowerModel& model, const TowerInput& content) {
    TowerPass pass;
    tower_forward(model.content, content, pass);
    return pass.acts.back();
}

std::vector<double> encode_content(const TwoTowerModel& model, const Post& post) {
    return encode_content(model, content_input(post, model.config));
}

std::vector<double> logits(const TwoTowerModel& model, const TowerInput& content, const TowerInput& user) {
    ForwardPass pass;
    return forward(model, content, user, pass);
}

std::vector<double> predict(const TwoTowerModel& model, const TowerInput& content, const TowerInput& user) {
    auto z = logits(model, content, user);
    for (auto& v : z) v = sigmoid(v);
    return z;
}

std::vector<double> predict(const TwoTowerModel& model, const Post& post, const User& user) {
    return predict(model, content_input(post, model.config), user_input(user, model.config));
}

double example_loss(const TwoTowerModel& model, const TrainingExample& ex) {
    auto z = logits(model, ex.content, ex.user);
    double loss = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) loss += bce_with_logit(z[c], (ex.labels >> c) & 1u);
    return loss;
}

double mean_loss(const TwoTowerModel& model, std::span<const TrainingExample> examples) {
    if (examples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& ex : examples) total += example_loss(model, ex);
    return total / static_cast<double>(examples.size());
}

double loss_and_gradient(const TwoTowerModel& model, std::span<const TrainingExample> batch, TwoTowerModel& grad) {
    ForwardPass pass;
    double loss = 0.0;
    const std::size_t c_out = model.config.content.output_dim;
    for (const auto& ex : batch) {
        const auto& z = forward(model, ex.content, ex.user, pass);
        std::vector<double> d_logit(z.size());
        for (std::size_t c = 0; c < z.size(); ++c) {
            const bool y = (ex.labels >> c) & 1u;
            loss += bce_with_logit(z[c], y);
            d_logit[c] = sigmoid(z[c]) - (y ? 1.0 : 0.0);
        }
        auto d_fused = mlp_backward(model.fusion, pass.fusion, std::move(d_logit), grad.fusion);
        std::vector<double> d_c(d_fused.begin(), d_fused.begin() + static_cast<std::ptrdiff_t>(c_out));
        std::vector<double> d_u(d_fused.begin() + static_cast<std::ptrdiff_t>(c_out), d_fused.end());
        tower_backward(model.content, ex.content, pass.content, std::move(d_c), grad.content);
        tower_backward(model.user, ex.user, pass.user, std::move(d_u), grad.user);
    }
    return loss;
}

namespace {

void zero_layers(std::vector<Layer>& layers) {
    for (auto& l : layers) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
}

void step_layers(std::vector<Layer>& params, const std::vector<Layer>& grads, double step) {
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k].w.size(); ++i) params[k].w[i] -= step * grads[k].w[i];
        for (std::size_t i = 0; i < params[k].b.size(); ++i) params[k].b[i] -= step * grads[k].b[i];
    }
}

// Only embedding rows named by the batch carry gradient, so only those are
// stepped and cleared.
void step_tower(Tower& params, Tower& grads, const std::set<std::uint32_t>& rows, double step) {
    step_layers(params.layers, grads.layers, step);
    zero_layers(grads.layers);
    for (auto r : rows) {
        double* p = params.embedding.data() + static_cast<std::size_t>(r) * params.embed_dim;
        double* g = grads.embedding.data() + static_cast<std::size_t>(r) * params.embed_dim;
        for (std::size_t d = 0; d < params.embed_dim; ++d) {
            p[d] -= step * g[d];
            g[d] = 0.0;
        }
    }
}

}  // namespace

TrainResult train(TwoTowerModel model, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> validation_set, const TrainConfig& config) {
    if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
        throw Error(ErrorKind::InvalidArgument, "learning_rate must be a finite value >= 0");
    }
    if (config.batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
    if (train_set.empty()) throw Error(ErrorKind::InvalidArgument, "training set is empty");

    TrainResult result;
    auto record = [&](std::size_t epoch) {
        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = mean_loss(model, train_set);
        if (!std::isfinite(m.train_loss)) {
            throw Error(ErrorKind::NonFiniteLoss, "training loss is not finite after epoch " + std::to_string(epoch));
        }
        if (!validation_set.empty()) m.validation_loss = mean_loss(model, validation_set);
        result.epochs.push_back(m);
    };
    record(0);

    TwoTowerModel grad = TwoTowerModel::zeros(model.config);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(config.seed);
    std::vector<TrainingExample> batch;
    std::set<std::uint32_t> content_rows, user_rows;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            content_rows.clear();
            user_rows.clear();
            for (std::size_t i = start; i < end; ++i) {
                const auto& ex = train_set[order[i]];
                batch.push_back(ex);
                content_rows.insert(ex.content.buckets.begin(), ex.content.buckets.end());
                user_rows.insert(ex.user.buckets.begin(), ex.user.buckets.end());
            }
            const double loss = loss_and_gradient(model, batch, grad);
            if (!std::isfinite(loss)) {
                throw Error(ErrorKind::NonFiniteLoss, "batch loss is not finite in epoch " + std::to_string(epoch) +
                                                          " at example " + std::to_string(start));
            }
            double step = config.learning_rate;
            if (config.reduction == BatchReduction::Mean) step /= static_cast<double>(batch.size());
            step_tower(model.content, grad.content, content_rows, step);
            step_tower(model.user, grad.user, user_rows, step);
            step_layers(model.fusion, grad.fusion, step);
            zero_layers(grad.fusion);
        }
        record(epoch);
    }
    result.model = std::move(model);
    return result;
}

GradCheckReport grad_check(const TwoTowerModel& model, std::span<const TrainingExample> batch,
                           const GradCheckOptions& options, const GradientFn& gradient) {
    if (!(options.epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be > 0");
    TwoTowerModel grad = TwoTowerModel::zeros(model.config);
    gradient(model, batch, grad);

    auto summed_loss = [&](const TwoTowerModel& m) {
        double total = 0.0;
        for (const auto& ex : batch) total += example_loss(m, ex);
        return total;
    };

    std::set<std::uint32_t> content_rows, user_rows;
    for (const auto& ex : batch) {
        content_rows.insert(ex.content.buckets.begin(), ex.content.buckets.end());
        user_rows.insert(ex.user.buckets.begin(), ex.user.buckets.end());
    }

    TwoTowerModel probe = model;
    auto params = probe.tensors();
    auto grads = grad.tensors();
    Rng rng(options.seed);
    GradCheckReport report;
    for (std::size_t t = 0; t < params.size(); ++t) {
        const auto& name = params[t].first;
        std::vector<std::size_t> candidates;
        const std::set<std::uint32_t>* rows = nullptr;
        std::size_t dim = 0;
        if (name == "content.embedding") rows = &content_rows, dim = model.content.embed_dim;
        if (name == "user.embedding") rows = &user_rows, dim = model.user.embed_dim;
        if (rows) {
            for (auto r : *rows) {
                for (std::size_t d = 0; d < dim; ++d) candidates.push_back(static_cast<std::size_t>(r) * dim + d);
            }
        } else {
            candidates.resize(params[t].second.size());
            for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
        }
        rng.shuffle(candidates);
        candidates.resize(std::min(candidates.size(), options.samples_per_tensor));

        auto values = params[t].second;
        for (auto idx : candidates) {
            const double saved = values[idx];
            values[idx] = saved + options.epsilon;
            const double up = summed_loss(probe);
            values[idx] = saved - options.epsilon;
            const double down = summed_loss(probe);
            values[idx] = saved;
            const double numeric = (up - down) / (2.0 * options.epsilon);
            const double analytic = grads[t].second[idx];
            const double denom = std::max(options.floor, std::abs(numeric) + std::abs(analytic));
            const double rel = std::abs(numeric - analytic) / denom;
            ++report.checked;
            if (report.checked == 1 || rel > report.max_relative_error) {
                report.max_relative_error = rel;
                report.worst_parameter = name + "[" + std::to_string(idx) + "]";
            }
        }
    }
    return report;
}

std::vector<std::optional<double>> per_class_auc(const TwoTowerModel& model,
                                                 std::span<const TrainingExample> examples) {
    const std::size_t n = model.config.n_classes;
    std::vector<std::vector<double>> scores(n);
    std::vector<std::vector<bool>> labels(n);
    for (const auto& ex : examples) {
        auto z = logits(model, ex.content, ex.user);
        for (std::size_t c = 0; c < n; ++c) {
            scores[c].push_back(z[c]);
            labels[c].push_back((ex.labels >> c) & 1u);
        }
    }
    std::vector<std::optional<double>> out(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::unique_ptr<bool[]> flags(new bool[labels[c].size()]);
        for (std::size_t i = 0; i < labels[c].size(); ++i) flags[i] = labels[c][i];
        out[c] = auc_roc(scores[c], std::span<const bool>(flags.get(), labels[c].size()));
    }
    return out;
}

EmbeddingTable export_embedding(const TwoTowerModel& model, std::span<const Post> posts) {
    EmbeddingTable table;
    table.reserve(posts.size());
    for (const auto& p : posts) table.emplace_back(p.id, encode_content(model, p));
    return table;
}

std::string embedding_to_csv(const EmbeddingTable& table) {
    std::size_t dim = table.empty() ? 0 : table.front().second.size();
    std::string out = "post_id";
    for (std::size_t d = 0; d < dim; ++d) out += ",e" + std::to_string(d);
    out += '\n';
    for (const auto& [id, v] : table) {
        out += id;
        for (double x : v) out += "," + format_double(x);
        out += '\n';
    }
    return out;
}

EmbeddingTable read_embedding_csv(const std::filesystem::path& path) {
    EmbeddingTable table;
    std::size_t dim = 0;
    for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        std::vector<std::string> fields;
        std::string field;
        std::stringstream ss{std::string(line)};
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (lineno == 1) {
            if (fields.empty() || fields[0] != "post_id") {
                throw Error(ErrorKind::Parse, path.string() + ":1: expected a post_id header");
            }
            dim = fields.size() - 1;
            return;
        }
        if (fields.size() != dim + 1) {
            throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                              std::to_string(dim + 1) + " fields");
        }
        std::vector<double> v;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            try {
                v.push_back(parse_double(fields[i]));
            } catch (const Error& e) {
                throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
        table.emplace_back(fields[0], std::move(v));
    });
    return table;
}

std::string checkpoint_to_text(const TwoTowerModel& model) {
    const auto& c = model.config;
    std::string out = std::string(kMagic) + " " + std::to_string(kFormatVersion) + "\n";
    auto kv = [&](const std::string& k, const std::string& v) { out += k + " " + v + "\n"; };
    for (const auto& [prefix, t] : {std::pair{"content", &c.content}, std::pair{"user", &c.user}}) {
        kv(std::string(prefix) + ".hash_dim", std::to_string(t->hash_dim));
        kv(std::string(prefix) + ".embed_dim", std::to_string(t->embed_dim));
        kv(std::string(prefix) + ".mlp_hidden", join_dims(t->mlp_hidden));
        kv(std::string(prefix) + ".output_dim", std::to_string(t->output_dim));
    }
    kv("dense_dim", std::to_string(c.dense_dim));
    kv("network_dim", std::to_string(c.network_dim));
    kv("fusion_hidden", join_dims(c.fusion_hidden));
    kv("n_classes", std::to_string(c.n_classes));
    kv("seed", std::to_string(c.seed));
    for (const auto& [name, values] : model.tensors()) {
        out += "tensor " + name + " " + std::to_string(values.size()) + "\n";
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out += ' ';
            out += format_double(values[i]);
        }
        out += '\n';
    }
    return out;
}

TwoTowerModel checkpoint_from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    auto fail = [](const std::string& msg) { return Error(ErrorKind::Parse, "checkpoint: " + msg); };
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != kMagic) throw fail("not a model checkpoint");
    if (version != kFormatVersion) throw fail("unsupported version " + std::to_string(version));

    ModelConfig c;
    std::map<std::string, std::string> header;
    std::string key;
    while (in >> key && key != "tensor") {
        std::string value;
        if (!(in >> value)) throw fail("missing value for " + key);
        header[key] = value;
    }
    auto get = [&](const std::string& k) -> const std::string& {
        auto it = header.find(k);
        if (it == header.end()) throw fail("missing header field " + k);
        return it->second;
    };
    try {
        for (auto [prefix, t] : {std::pair{"content", &c.content}, std::pair{"user", &c.user}}) {
            t->hash_dim = std::stoul(get(std::string(prefix) + ".hash_dim"));
            t->embed_dim = std::stoul(get(std::string(prefix) + ".embed_dim"));
            t->mlp_hidden = parse_dims(get(std::string(prefix) + ".mlp_hidden"));
            t->output_dim = std::stoul(get(std::string(prefix) + ".output_dim"));
        }
        c.dense_dim = std::stoul(get("dense_dim"));
        c.network_dim = std::stoul(get("network_dim"));
        c.fusion_hidden = parse_dims(get("fusion_hidden"));
        c.n_classes = std::stoul(get("n_classes"));
        c.seed = std::stoull(get("seed"));
    } catch (const std::logic_error&) {
        throw fail("malformed header value");
    }

    TwoTowerModel m = TwoTowerModel::zeros(c);
    for (auto& [name, values] : m.tensors()) {
        std::string got_name;
        std::size_t n = 0;
        if (key != "tensor") throw fail("expected tensor " + name);
        if (!(in >> got_name >> n) || got_name != name || n != values.size()) {
            throw fail("tensor " + name + " missing or mis-sized");
        }
        std::string token;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(in >> token)) throw fail("tensor " + name + " truncated");
            values[i] = parse_double(token);
        }
        key.clear();
        in >> key;
    }
    if (!key.empty()) throw fail("trailing content after last tensor");
    if (!m.all_finite()) throw fail("non-finite parameter");
    return m;
}

void save_checkpoint(const TwoTowerModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, checkpoint_to_text(model));
}

TwoTowerModel load_checkpoint(const std::filesystem::path& path) {
    try {
        return checkpoint_from_text(read_file(path));
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Parse) throw;
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

}  // namespace affectfeed::model
