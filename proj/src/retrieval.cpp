#include "qppbench/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qppbench/format.hpp"

namespace qppbench {

RetrievalModel RetrievalModel::bm25(double k1, double b) {
    if (!(k1 > 0.0)) throw std::invalid_argument("bm25: k1 must be positive");
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("bm25: b must be in [0,1]");
    RetrievalModel m;
    m.kind = ModelKind::BM25;
    m.k1 = k1;
    m.b = b;
    return m;
}

RetrievalModel RetrievalModel::lm_dirichlet(double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("lmdir: mu must be positive");
    RetrievalModel m;
    m.kind = ModelKind::LMDirichlet;
    m.mu = mu;
    return m;
}

RetrievalModel RetrievalModel::lm_jelinek_mercer(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("lmjm: lambda must be in (0,1)");
    RetrievalModel m;
    m.kind = ModelKind::LMJelinekMercer;
    m.lambda = lambda;
    return m;
}

std::string RetrievalModel::name() const {
    switch (kind) {
        case ModelKind::BM25:
            return "bm25(" + format_double(k1) + "," + format_double(b) + ")";
        case ModelKind::LMDirichlet:
            return "lmdir(" + format_double(mu) + ")";
        case ModelKind::LMJelinekMercer:
            return "lmjm(" + format_double(lambda) + ")";
    }
    return "?";
}

RetrievalModel parse_model(std::string_view spec) {
    std::string s(spec);
    std::string name = s;
    std::vector<double> params;
    auto open = s.find('(');
    if (open != std::string::npos) {
        if (s.back() != ')') throw std::runtime_error("parse_model: missing ')' in '" + s + "'");
        name = s.substr(0, open);
        std::string inner = s.substr(open + 1, s.size() - open - 2);
        std::stringstream ss(inner);
        std::string tok;
        while (std::getline(ss, tok, ','))
            params.push_back(parse_double(tok, "parse_model"));
    }
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    if (name == "bm25") {
        if (params.empty()) return RetrievalModel::bm25(0.9, 0.4);
        if (params.size() != 2)
            throw std::runtime_error("parse_model: bm25 takes (k1,b)");
        return RetrievalModel::bm25(params[0], params[1]);
    }
    if (name == "lmdir") {
        if (params.empty()) return RetrievalModel::lm_dirichlet(1000.0);
        if (params.size() != 1) throw std::runtime_error("parse_model: lmdir takes (mu)");
        return RetrievalModel::lm_dirichlet(params[0]);
    }
    if (name == "lmjm") {
        if (params.empty()) return RetrievalModel::lm_jelinek_mercer(0.6);
        if (params.size() != 1) throw std::runtime_error("parse_model: lmjm takes (lambda)");
        return RetrievalModel::lm_jelinek_mercer(params[0]);
    }
    throw std::runtime_error("parse_model: unknown model '" + s + "'");
}

namespace {

struct QueryTerm {
    std::optional<TermId> id; // nullopt when unseen in the collection
    std::uint32_t qtf;
};

// Distinct query terms with multiplicities, in first-appearance order.
std::vector<QueryTerm> query_profile(const Index& index, const Query& query) {
    std::vector<QueryTerm> profile;
    std::vector<std::string> seen;
    for (const auto& tok : query.terms) {
        auto it = std::find(seen.begin(), seen.end(), tok);
        if (it != seen.end()) {
            ++profile[static_cast<std::size_t>(it - seen.begin())].qtf;
            continue;
        }
        seen.push_back(tok);
        profile.push_back(QueryTerm{index.term(tok), 1});
    }
    return profile;
}

std::uint32_t tf_in_doc(const Index& index, TermId t, DocIdx d) {
    auto posts = index.postings(t);
    auto it = std::lower_bound(posts.begin(), posts.end(), d,
                               [](const Posting& p, DocIdx doc) { return p.doc < doc; });
    if (it != posts.end() && it->doc == d) return it->tf;
    return 0;
}

double bm25_idf(const Index& index, TermId t) {
    double n = static_cast<double>(index.num_docs());
    double df = static_cast<double>(index.df(t));
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

// One query term's contribution given (tf, dl). Terms with zero collection
// frequency are dropped from LM scoring; BM25 contributes 0 at tf = 0.
double term_score(const RetrievalModel& m, const Index& index, TermId t, std::uint32_t qtf,
                  double tf, double dl) {
    switch (m.kind) {
        case ModelKind::BM25: {
            if (tf <= 0.0) return 0.0;
            double norm = tf + m.k1 * (1.0 - m.b + m.b * dl / index.avg_doc_len());
            return qtf * bm25_idf(index, t) * tf * (m.k1 + 1.0) / norm;
        }
        case ModelKind::LMDirichlet: {
            double p = index.collection_prob(t);
            if (p <= 0.0) return 0.0;
            return qtf * std::log((tf + m.mu * p) / (dl + m.mu));
        }
        case ModelKind::LMJelinekMercer: {
            double p = index.collection_prob(t);
            if (p <= 0.0) return 0.0;
            double ml = dl > 0.0 ? tf / dl : 0.0;
            return qtf * std::log(m.lambda * ml + (1.0 - m.lambda) * p);
        }
    }
    return 0.0;
}

double score_profile(const RetrievalModel& m, const Index& index,
                     const std::vector<QueryTerm>& profile, DocIdx d) {
    double dl = static_cast<double>(index.doc_len(d));
    double s = 0.0;
    for (const auto& qt : profile) {
        if (!qt.id) continue;
        s += term_score(m, index, *qt.id, qt.qtf, tf_in_doc(index, *qt.id, d), dl);
    }
    return s;
}

} // namespace

double score(const RetrievalModel& model, const Index& index, const Query& query, DocIdx doc) {
    if (doc >= index.num_docs()) throw std::runtime_error("score: doc index out of range");
    return score_profile(model, index, query_profile(index, query), doc);
}

double score(const RetrievalModel& model, const Index& index, const Query& query,
             const std::string& doc_id) {
    auto d = index.find_doc(doc_id);
    if (!d) throw std::runtime_error("score: unknown doc_id '" + doc_id + "'");
    return score(model, index, query, *d);
}

RankedList retrieve_topk(const RetrievalModel& model, const Index& index, const Query& query,
                         std::size_t k) {
    if (k < 1) throw std::invalid_argument("retrieve_topk: k must be >= 1");
    RankedList out;
    out.query_id = query.query_id;
    out.model = model.name();

    const auto profile = query_profile(index, query);

    // Candidates: documents sharing at least one query term. DocIdx order is
    // doc_id order, which gives the tie-break for free.
    std::vector<DocIdx> candidates;
    for (const auto& qt : profile) {
        if (!qt.id) continue;
        for (const auto& p : index.postings(*qt.id)) candidates.push_back(p.doc);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<std::pair<double, DocIdx>> scored;
    scored.reserve(candidates.size());
    for (DocIdx d : candidates)
        scored.emplace_back(score_profile(model, index, profile, d), d);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    if (scored.size() > k) scored.resize(k);

    out.entries.reserve(scored.size());
    for (const auto& [s, d] : scored) out.entries.push_back(ScoredDoc{index.doc_id(d), s});
    return out;
}

double collection_score(const RetrievalModel& model, const Index& index, const Query& query) {
    if (index.total_len() == 0) throw std::runtime_error("collection_score: empty collection");
    double dl = static_cast<double>(index.total_len());
    double s = 0.0;
    for (const auto& qt : query_profile(index, query)) {
        if (!qt.id) continue;
        s += term_score(model, index, *qt.id, qt.qtf, static_cast<double>(index.cf(*qt.id)), dl);
    }
    return s;
}

void write_run(std::ostream& out, const std::vector<RankedList>& runs, const std::string& tag) {
    for (const auto& run : runs) {
        std::size_t rank = 1;
        for (const auto& e : run.entries) {
            out << run.query_id << " Q0 " << e.doc_id << ' ' << rank << ' '
                << format_double(e.score) << ' ' << tag << '\n';
            ++rank;
        }
    }
}

void write_run(const std::string& path, const std::vector<RankedList>& runs,
               const std::string& tag) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    write_run(out, runs, tag);
}

std::vector<RankedList> read_run(std::istream& in, const std::string& path_for_errors) {
    std::vector<RankedList> runs;
    std::unordered_map<std::string, std::size_t> by_query;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, q0, docid, rank_tok, score_tok, tag;
        if (!(ss >> qid >> q0 >> docid >> rank_tok >> score_tok >> tag))
            throw std::runtime_error(path_for_errors + ":" + std::to_string(lineno) +
                                     ": malformed run line (expected 6 fields)");
        const std::string where = path_for_errors + ":" + std::to_string(lineno);
        long rank = parse_long(rank_tok, where);
        double sc = parse_double(score_tok, where);

        auto [it, inserted] = by_query.emplace(qid, runs.size());
        if (inserted) {
            runs.push_back(RankedList{qid, tag, {}});
        }
        auto& run = runs[it->second];
        if (rank != static_cast<long>(run.entries.size()) + 1)
            throw std::runtime_error(where + ": ranks must be 1..n contiguous (got " +
                                     std::to_string(rank) + ", expected " +
                                     std::to_string(run.entries.size() + 1) + ")");
        for (const auto& e : run.entries)
            if (e.doc_id == docid)
                throw std::runtime_error(where + ": duplicate doc_id '" + docid +
                                         "' for query '" + qid + "'");
        run.entries.push_back(ScoredDoc{docid, sc});
    }
    return runs;
}

std::vector<RankedList> read_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return read_run(in, path);
}

} // namespace qppbench
