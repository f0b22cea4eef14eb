// Regenerates the bundled fixture PNGs.
#include <cstdio>
#include <filesystem>
#include <string>

#include <ciconv.hpp>

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("fixtures");
    try {
        fs::create_directories(root / "scenes");
        fs::create_directories(root / "natural");
        for (auto seed : ciconv::kSceneSeeds) {
            const auto path = root / "scenes" / ("scene_" + std::to_string(seed) + ".png");
            ciconv::write_file(path, ciconv::encode_rgb_png(ciconv::synthetic_scene(seed)));
            std::printf("%s\n", path.c_str());
        }
        fs::create_directories(root / "random");
        const auto path = root / "natural" / ("natural_" + std::to_string(ciconv::kNaturalSeed) + ".png");
        ciconv::write_file(path, ciconv::encode_rgb_png(
                                     ciconv::synthetic_scene(ciconv::kNaturalSeed, ciconv::natural_scene_options())));
        std::printf("%s\n", path.c_str());
        const auto random = root / "random" / "random_32.png";
        ciconv::write_file(random, ciconv::encode_rgb_png(ciconv::random_image(32, 32, ciconv::kRandomSeed)));
        std::printf("%s\n", random.c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "make_fixtures: %s\n", e.what());
        return 1;
    }
    return 0;
}
