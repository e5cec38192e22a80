#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "affectfeed/corpus.hpp"
#include "affectfeed/dataset.hpp"

namespace affectfeed::model {

struct TowerConfig {
    std::size_t hash_dim = 4096;  // token-hash buckets
    std::size_t embed_dim = 32;
    std::vector<std::size_t> mlp_hidden{64};
    std::size_t output_dim = 32;
};

struct ModelConfig {
    TowerConfig content;
    TowerConfig user;
    std::size_t dense_dim = kDefaultFeatureDim;    // post dense features
    std::size_t network_dim = kDefaultFeatureDim;  // user network statistics
    // Empty: the fusion head is one linear layer over both tower outputs.
    std::vector<std::size_t> fusion_hidden;
    std::size_t n_classes = 23;
    std::uint64_t seed = 0;

    // Throws Error(InvalidArgument) when any dimension is zero.
    void validate() const;
};

// Fully connected layer; weights are row-major out x in.
struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w;
    std::vector<double> b;
};

struct Tower {
    std::size_t hash_dim = 0;
    std::size_t embed_dim = 0;
    std::vector<double> embedding;  // hash_dim x embed_dim
    std::vector<Layer> layers;      // ReLU between layers, linear output
};

struct TwoTowerModel {
    ModelConfig config;
    Tower content;
    Tower user;
    std::vector<Layer> fusion;  // last layer produces one logit per class

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
    static TwoTowerModel initialize(const ModelConfig& config);
    // Same shapes, every parameter 0.
    static TwoTowerModel zeros(const ModelConfig& config);

    // Every parameter tensor with a stable name, in checkpoint order.
    std::vector<std::pair<std::string, std::span<double>>> tensors();
    std::vector<std::pair<std::string, std::span<const double>>> tensors() const;
    std::size_t parameter_count() const;
    bool all_finite() const;

    friend bool operator==(const TwoTowerModel& a, const TwoTowerModel& b);
};

// Hashed token buckets plus the dense block that feed one tower.
struct TowerInput {
    std::vector<std::uint32_t> buckets;
    std::vector<double> dense;
};

TowerInput content_input(const Post& post, const ModelConfig& config);
TowerInput user_input(const User& user, const ModelConfig& config);

struct TrainingExample {
    TowerInput content;
    TowerInput user;
    dataset::LabelMask labels = 0;
};

// Throws Error(DanglingReference) for rows naming unknown posts or users.
std::vector<TrainingExample> make_examples(const Corpus& corpus, std::span<const dataset::LabeledExample> rows,
                                           const ModelConfig& config);

std::vector<double> encode_content(const TwoTowerModel& model, const TowerInput& content);
std::vector<double> encode_content(const TwoTowerModel& model, const Post& post);
std::vector<double> logits(const TwoTowerModel& model, const TowerInput& content, const TowerInput& user);
std::vector<double> predict(const TwoTowerModel& model, const TowerInput& content, const TowerInput& user);
std::vector<double> predict(const TwoTowerModel& model, const Post& post, const User& user);

// Sum over classes of binary cross-entropy for one example.
double example_loss(const TwoTowerModel& model, const TrainingExample& ex);
// Mean of example_loss over the examples (0 for none).
double mean_loss(const TwoTowerModel& model, std::span<const TrainingExample> examples);

// Returns the summed loss over the batch and writes the gradient of that
// sum into grad, which must have the model's shapes (see zeros()).
double loss_and_gradient(const TwoTowerModel& model, std::span<const TrainingExample> batch, TwoTowerModel& grad);

using GradientFn =
    std::function<double(const TwoTowerModel&, std::span<const TrainingExample>, TwoTowerModel&)>;

enum class BatchReduction { Sum, Mean };

struct TrainConfig {
    std::size_t epochs = 3;
    double learning_rate = 0.0007;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    // Sum applies the learning rate to every example's gradient, as in
    // per-example SGD; Mean divides the step by the batch size.
    BatchReduction reduction = BatchReduction::Sum;
};

struct EpochMetrics {
    std::size_t epoch = 0;  // 0 is the state before training
    double train_loss = 0.0;
    std::optional<double> validation_loss;
};

struct TrainResult {
    TwoTowerModel model;
    std::vector<EpochMetrics> epochs;
};

// Plain minibatch SGD over a fresh shuffle each epoch. Throws
// Error(NonFiniteLoss) as soon as a batch loss stops being finite.
TrainResult train(TwoTowerModel model, std::span<const TrainingExample> train_set,
                  std::span<const TrainingExample> validation_set, const TrainConfig& config);

struct GradCheckOptions {
    double epsilon = 1e-5;
    std::size_t samples_per_tensor = 24;
    // Denominator floor for the relative error, so that gradients that are
    // both tiny are compared absolutely.
    double floor = 1e-6;
    std::uint64_t seed = 0;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::string worst_parameter;  // "tensor[index]"
    std::size_t checked = 0;
};

// Compares the gradient from `gradient` with central finite differences of
// the summed batch loss. Embedding rows are sampled among the buckets the
// batch touches.
GradCheckReport grad_check(const TwoTowerModel& model, std::span<const TrainingExample> batch,
                           const GradCheckOptions& options = {}, const GradientFn& gradient = loss_and_gradient);

// Per-class AUC-ROC over the examples; empty entries for single-class
// columns.
std::vector<std::optional<double>> per_class_auc(const TwoTowerModel& model,
                                                 std::span<const TrainingExample> examples);

using EmbeddingTable = std::vector<std::pair<std::string, std::vector<double>>>;

EmbeddingTable export_embedding(const TwoTowerModel& model, std::span<const Post> posts);
std::string embedding_to_csv(const EmbeddingTable& table);
EmbeddingTable read_embedding_csv(const std::filesystem::path& path);

std::string checkpoint_to_text(const TwoTowerModel& model);
TwoTowerModel checkpoint_from_text(std::string_view text);
void save_checkpoint(const TwoTowerModel& model, const std::filesystem::path& path);
TwoTowerModel load_checkpoint(const std::filesystem::path& path);

}  // namespace affectfeed::model
