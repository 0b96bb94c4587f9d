#include "tdmi/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace tdmi {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

bool get_u32(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

void put_f32(std::ostream& os, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
}

bool get_f32(std::istream& is, float& f) {
    std::uint32_t bits;
    if (!get_u32(is, bits)) return false;
    std::memcpy(&f, &bits, 4);
    return true;
}

} // namespace

void write_archive(const std::string& path, const Archive& archive) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open archive for writing: " + path);
    std::ofstream manifest(path + ".manifest");
    if (!manifest) throw Error("cannot open manifest for writing: " + path + ".manifest");
    for (const auto& [name, entry] : archive) {
        put_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(os, static_cast<std::uint32_t>(entry.shape.size()));
        for (int d : entry.shape) put_u32(os, static_cast<std::uint32_t>(d));
        for (float f : entry.data) put_f32(os, f);

        manifest << name << " ";
        for (std::size_t i = 0; i < entry.shape.size(); ++i)
            manifest << (i ? "x" : "") << entry.shape[i];
        manifest << "\n";
    }
    if (!os || !manifest) throw Error("archive write failed: " + path);
}

Archive read_archive(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open archive: " + path);
    Archive archive;
    std::uint32_t name_len;
    while (get_u32(is, name_len)) {
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw Error("truncated archive: " + path);
        std::uint32_t rank;
        if (!get_u32(is, rank)) throw Error("truncated archive: " + path);
        ArchiveEntry entry;
        std::int64_t numel = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            std::uint32_t d;
            if (!get_u32(is, d)) throw Error("truncated archive: " + path);
            entry.shape.push_back(static_cast<int>(d));
            numel *= d;
        }
        entry.data.resize(static_cast<std::size_t>(numel));
        for (auto& f : entry.data)
            if (!get_f32(is, f)) throw Error("truncated archive: " + path);
        archive.emplace(std::move(name), std::move(entry));
    }
    return archive;
}

} // namespace tdmi
