#include "betarce/store.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "betarce/errors.hpp"
#include "betarce/serialize.hpp"
#include "betarce/version.hpp"

namespace betarce {

namespace fs = std::filesystem;

namespace {

std::string member_file(int i) {
    std::ostringstream os;
    os << "member_" << std::setw(3) << std::setfill('0') << i << ".bin";
    return os.str();
}

}  // namespace

void save_model_store(const fs::path& dir, const Ensemble& ensemble, const ClassifierPtr& base,
                      std::uint64_t dataset_fingerprint) {
    fs::create_directories(dir);
    Json manifest{{"format", "betarce-model-store"},
                  {"format_version", 1},
                  {"library_version", kVersion},
                  {"dataset_fingerprint", fingerprint_hex(dataset_fingerprint)},
                  {"space", to_json(ensemble.space)},
                  {"k", ensemble.size()},
                  {"seed_stream", ensemble.seed_stream}};
    Json members = Json::array();
    for (int i = 0; i < ensemble.size(); ++i) {
        const auto file = member_file(i);
        ensemble.members[static_cast<std::size_t>(i)]->save_file(dir / file);
        members.push_back({{"file", file}, {"setting", to_json(ensemble.members[static_cast<std::size_t>(i)]->provenance())}});
    }
    manifest["members"] = members;
    if (base) {
        base->save_file(dir / "base.bin");
        manifest["base"] = {{"file", "base.bin"}, {"setting", to_json(base->provenance())}};
    } else {
        manifest["base"] = nullptr;
    }
    std::ofstream os(dir / "manifest.json");
    if (!os) throw IoError("cannot write " + (dir / "manifest.json").string());
    os << manifest.dump(2) << '\n';
}

ModelStore load_model_store(const fs::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw IoError("no model store manifest in " + dir.string());
    Json manifest;
    try {
        manifest = Json::parse(is);
    } catch (const Json::exception& e) {
        throw IoError("malformed model store manifest: " + std::string(e.what()));
    }
    ModelStore store;
    store.dataset_fingerprint = std::stoull(manifest.at("dataset_fingerprint").get<std::string>(), nullptr, 16);
    store.ensemble.space = model_space_from_json(manifest.at("space"));
    store.ensemble.seed_stream = manifest.at("seed_stream").get<std::uint64_t>();
    for (const auto& m : manifest.at("members")) {
        std::shared_ptr<Classifier> c = Classifier::load_file(dir / m.at("file").get<std::string>());
        c->set_provenance(training_setting_from_json(m.at("setting")));
        store.ensemble.members.push_back(std::move(c));
    }
    if (static_cast<int>(store.ensemble.members.size()) != manifest.at("k").get<int>())
        throw IoError("model store member count disagrees with its manifest");
    if (!manifest.at("base").is_null()) {
        std::shared_ptr<Classifier> c = Classifier::load_file(dir / manifest["base"].at("file").get<std::string>());
        c->set_provenance(training_setting_from_json(manifest["base"].at("setting")));
        store.base = std::move(c);
    }
    return store;
}

}  // namespace betarce
