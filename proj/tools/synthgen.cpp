// Regenerates the bundled synthetic benchmark dataset.
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "qppbench/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthgen: deterministic synthetic corpus/topics/qrels generator"};
    qppbench::SynthSpec spec;
    std::string out_dir = ".";
    app.add_option("--docs", spec.n_docs, "number of documents")->check(CLI::PositiveNumber);
    app.add_option("--queries", spec.n_queries, "number of queries")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", spec.seed, "generator seed");
    app.add_option("--out", out_dir, "output directory")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        auto data = qppbench::make_synth(spec);
        auto dir = std::filesystem::path(out_dir);
        qppbench::write_synth(data, (dir / "corpus.jsonl").string(),
                              (dir / "topics.tsv").string(), (dir / "qrels.txt").string());
        std::cout << "wrote " << data.docs.size() << " docs, " << data.topics.size()
                  << " topics to " << out_dir << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: [synthgen] " << e.what() << '\n';
        return 1;
    }
    return 0;
}
