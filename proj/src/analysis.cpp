#include "affectfeed/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include "affectfeed/error.hpp"
#include "affectfeed/io_util.hpp"

namespace affectfeed::analysis {

namespace {

constexpr std::size_t kOther = kTaxonomySize;

std::string csv_number(double v) { return format_double(v); }

// Per-post option support: number of raters choosing each option.
std::map<std::string, std::vector<std::size_t>> support_by_post(std::span<const AnnotationRecord> annotations) {
    std::map<std::string, std::vector<std::size_t>> out;
    for (const auto& a : annotations) {
        auto& s = out[a.post_id];
        s.resize(kOptionCount, 0);
        for (Affect x : a.selected.to_vector()) {
            if (is_taxonomy(x)) ++s[static_cast<std::size_t>(x)];
        }
        if (a.other) ++s[kOther];
    }
    return out;
}

}  // namespace

std::string option_name(std::size_t option) {
    if (option == kOther) return "other";
    if (option > kOther) throw Error(ErrorKind::InvalidArgument, "option index out of range");
    return std::string(affect_name(taxonomy_affects()[option]));
}

RaterMatrix rater_matrix(std::span<const AnnotationRecord> annotations) {
    RaterMatrix m;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& a : annotations) {
        auto [it, fresh] = index.emplace(a.post_id, m.size());
        if (fresh) m.push_back({a.post_id, {}, {}});
        auto& post = m[it->second];
        std::vector<double> row(kOptionCount, 0.0);
        for (Affect x : a.selected.to_vector()) {
            if (is_taxonomy(x)) row[static_cast<std::size_t>(x)] = 1.0;
        }
        if (a.other) row[kOther] = 1.0;
        post.raters.push_back(a.rater_id);
        post.judgements.push_back(std::move(row));
    }
    return m;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorKind::InvalidArgument, "pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

InterraterResult interrater_correlation(const RaterMatrix& matrix) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> cells;
    for (const auto& post : matrix) {
        const std::size_t k = post.raters.size();
        if (k < 2) continue;
        for (std::size_t r = 0; r < k; ++r) {
            auto& [mine, others] = cells[post.raters[r]];
            for (std::size_t o = 0; o < kOptionCount; ++o) {
                double sum = 0.0;
                for (std::size_t q = 0; q < k; ++q) {
                    if (q != r) sum += post.judgements[q][o];
                }
                mine.push_back(post.judgements[r][o]);
                others.push_back(sum / static_cast<double>(k - 1));
            }
        }
    }
    InterraterResult out;
    double total = 0.0;
    for (const auto& [rater, xy] : cells) {
        auto r = pearson(xy.first, xy.second);
        if (!r) {
            out.excluded.push_back(rater);
            continue;
        }
        out.per_rater.emplace_back(rater, *r);
        total += *r;
    }
    if (out.per_rater.empty()) {
        throw Error(ErrorKind::UndefinedCorrelation, "no rater has a defined correlation with the other raters");
    }
    out.mean = total / static_cast<double>(out.per_rater.size());
    return out;
}

std::string CorrelationMatrix::to_csv() const {
    std::string out;
    for (const auto& c : col_labels) out += "," + c;
    out += '\n';
    for (std::size_t r = 0; r < row_labels.size(); ++r) {
        out += row_labels[r];
        for (std::size_t c = 0; c < col_labels.size(); ++c) {
            out += ',';
            if (const auto& v = at(r, c)) out += csv_number(*v);
        }
        out += '\n';
    }
    return out;
}

CorrelationMatrix pearson_matrix(const LabelTable& a, const LabelTable& b) {
    std::vector<const std::vector<double>*> ra, rb;
    for (const auto& [id, row] : a.rows) {
        auto it = b.rows.find(id);
        if (it == b.rows.end()) continue;
        if (row.size() != a.columns.size() || it->second.size() != b.columns.size()) {
            throw Error(ErrorKind::InvalidArgument, "label table row " + id + " has the wrong width");
        }
        ra.push_back(&row);
        rb.push_back(&it->second);
    }
    if (ra.empty()) throw Error(ErrorKind::NoOverlap, "label tables share no post");

    auto column = [](const std::vector<const std::vector<double>*>& rows, std::size_t c) {
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto* r : rows) v.push_back((*r)[c]);
        return v;
    };
    CorrelationMatrix m;
    m.row_labels = a.columns;
    m.col_labels = b.columns;
    m.posts = ra.size();
    std::vector<std::vector<double>> cols_b;
    for (std::size_t j = 0; j < b.columns.size(); ++j) cols_b.push_back(column(rb, j));
    for (std::size_t i = 0; i < a.columns.size(); ++i) {
        const auto x = column(ra, i);
        for (std::size_t j = 0; j < b.columns.size(); ++j) m.cells.push_back(pearson(x, cols_b[j]));
    }
    return m;
}

LabelTable consensus_table(std::span<const AnnotationRecord> annotations, std::size_t k) {
    LabelTable t;
    for (Affect a : taxonomy_affects()) t.columns.emplace_back(affect_name(a));
    for (const auto& [post, support] : support_by_post(annotations)) {
        std::vector<double> row(kTaxonomySize);
        for (std::size_t i = 0; i < kTaxonomySize; ++i) row[i] = support[i] >= k ? 1.0 : 0.0;
        t.rows[post] = std::move(row);
    }
    return t;
}

LabelTable engagement_table(const Corpus& corpus) {
    LabelTable t;
    for (auto k : all_event_kinds()) t.columns.emplace_back(event_kind_name(k));
    for (const auto& p : corpus.posts()) t.rows[p.id].assign(kEventKindCount, 0.0);
    for (const auto& e : corpus.events()) t.rows[e.post_id][static_cast<std::size_t>(e.kind)] = 1.0;
    return t;
}

LabelTable feeling_table(std::span<const synth::PublisherFeeling> feelings, std::size_t min_frequency) {
    std::map<std::string, std::size_t> freq;
    for (const auto& f : feelings) ++freq[f.feeling];
    LabelTable t;
    std::map<std::string, std::size_t> col;
    for (const auto& [name, n] : freq) {
        if (n >= min_frequency) {
            col[name] = t.columns.size();
            t.columns.push_back(name);
        }
    }
    for (const auto& f : feelings) {
        auto it = col.find(f.feeling);
        if (it == col.end()) continue;
        auto& row = t.rows[f.post_id];
        row.resize(t.columns.size(), 0.0);
        row[it->second] = 1.0;
    }
    return t;
}

std::string AgreementThreshold::label() const { return (exact ? "=" : ">=") + std::to_string(raters); }

std::vector<AgreementThreshold> default_thresholds() { return {{1, false}, {2, false}, {3, true}}; }

std::vector<AgreementRow> care_agreement(std::span<const AnnotationRecord> annotations,
                                         const std::map<std::string, AffectSet>& care_labels,
                                         std::span<const AgreementThreshold> thresholds) {
    // Support per post in the comment-label view: angered collapses and
    // "other" is tracked separately.
    struct Support {
        std::array<std::size_t, kAffectSlots> affect{};
        std::size_t other = 0;
    };
    std::map<std::string, Support> support;
    for (const auto& a : annotations) {
        auto& s = support[a.post_id];
        for (Affect x : synth::care_view(a.selected).to_vector()) ++s.affect[static_cast<std::size_t>(x)];
        if (a.other) ++s.other;
    }

    std::vector<AgreementRow> rows;
    for (const auto& th : thresholds) {
        if (th.raters == 0) throw Error(ErrorKind::InvalidArgument, "agreement threshold needs at least one rater");
        AgreementRow row{th, 0, 0.0, 0.0, 0.0};
        std::size_t any = 0, all = 0, other = 0;
        for (const auto& [post, s] : support) {
            auto it = care_labels.find(post);
            if (it == care_labels.end() || it->second.empty()) continue;
            const AffectSet care = it->second;
            AffectSet human;
            for (std::size_t i = 0; i < kAffectSlots; ++i) {
                if (th.accepts(s.affect[i])) human.insert(static_cast<Affect>(i));
            }
            ++row.posts;
            if (human.intersects(care)) ++any;
            if (human.includes(care)) ++all;
            const bool non_care = (human.bits() & ~care.bits()) != 0 || th.accepts(s.other);
            if (non_care) ++other;
        }
        if (row.posts > 0) {
            const double n = static_cast<double>(row.posts);
            row.any_care = 100.0 * static_cast<double>(any) / n;
            row.all_care = 100.0 * static_cast<double>(all) / n;
            row.other = 100.0 * static_cast<double>(other) / n;
        }
        rows.push_back(row);
    }
    return rows;
}

std::string agreement_to_csv(std::span<const AgreementRow> rows) {
    std::string out = "threshold,posts,any_care,all_care,other\n";
    for (const auto& r : rows) {
        out += r.threshold.label() + "," + std::to_string(r.posts) + "," + csv_number(r.any_care) + "," +
               csv_number(r.all_care) + "," + csv_number(r.other) + "\n";
    }
    return out;
}

AnnotationStats annotation_stats(std::span<const AnnotationRecord> annotations) {
    if (annotations.empty()) throw Error(ErrorKind::InvalidArgument, "annotation_stats: no annotations");
    AnnotationStats st;
    st.rater_posts = annotations.size();
    std::size_t selections = 0;
    for (const auto& a : annotations) selections += a.selection_count();
    st.mean_selections = static_cast<double>(selections) / static_cast<double>(annotations.size());

    const auto support = support_by_post(annotations);
    st.posts = support.size();
    for (std::size_t o = 0; o < kOptionCount; ++o) {
        OptionStats os;
        os.option = option_name(o);
        double sum = 0.0;
        for (const auto& [post, s] : support) {
            if (s[o] >= 1) {
                ++os.posts_1x;
                sum += static_cast<double>(s[o]);
            }
            if (s[o] >= 3) ++os.posts_3x;
        }
        if (os.posts_1x > 0) {
            os.mean_support = sum / static_cast<double>(os.posts_1x);
            double ss = 0.0;
            for (const auto& [post, s] : support) {
                if (s[o] >= 1) ss += (static_cast<double>(s[o]) - os.mean_support) * (static_cast<double>(s[o]) - os.mean_support);
            }
            os.sd_support = std::sqrt(ss / static_cast<double>(os.posts_1x));
        }
        st.options.push_back(os);
    }
    return st;
}

std::string annotation_stats_to_csv(const AnnotationStats& st) {
    std::string out = "option,posts_1x,posts_3x,mean_support,sd_support\n";
    for (const auto& o : st.options) {
        out += o.option + "," + std::to_string(o.posts_1x) + "," + std::to_string(o.posts_3x) + "," +
               csv_number(o.mean_support) + "," + csv_number(o.sd_support) + "\n";
    }
    return out;
}

}  // namespace affectfeed::analysis
