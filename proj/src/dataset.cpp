#include "fairnorm/dataset.hpp"

#include "fairnorm/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace fairnorm {

namespace {

std::string row_label(std::size_t row) { return "row " + std::to_string(row); }

void validate_token(const std::string& value, const char* what, std::size_t row)
{
    if (value.empty())
        throw DataError(row_label(row) + ": empty " + what);
}

}  // namespace

EmbeddingDataset::EmbeddingDataset(std::vector<Sample> samples, EmbeddingMatrix vectors)
    : samples_(std::move(samples)), vectors_(std::move(vectors))
{
    if (vectors_.cols() < 1)
        throw DataError("embedding dimension must be positive");
    if (static_cast<std::size_t>(vectors_.rows()) != samples_.size())
        throw DataError("sample count (" + std::to_string(samples_.size()) +
                        ") does not match vector count (" + std::to_string(vectors_.rows()) + ")");

    subject_of_.reserve(samples_.size());
    std::unordered_map<std::string, int> subject_index;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const Sample& s = samples_[i];
        const std::size_t row = i + 1;
        validate_token(s.sample_id, "sample_id", row);
        validate_token(s.subject_id, "subject_id", row);
        for (const auto& [name, label] : s.attributes) {
            validate_token(name, "attribute name", row);
            validate_token(label, "attribute label", row);
        }
        if (!vectors_.row(static_cast<Eigen::Index>(i)).allFinite())
            throw DataError(row_label(row) + ": non-finite vector component");
        if (!row_of_.emplace(s.sample_id, i).second)
            throw DataError(row_label(row) + ": duplicate sample_id '" + s.sample_id + "'");
        auto [it, inserted] = subject_index.emplace(s.subject_id, static_cast<int>(subject_ids_.size()));
        if (inserted)
            subject_ids_.push_back(s.subject_id);
        subject_of_.push_back(it->second);
    }
}

std::optional<std::size_t> EmbeddingDataset::find(const std::string& sample_id) const
{
    auto it = row_of_.find(sample_id);
    if (it == row_of_.end())
        return std::nullopt;
    return it->second;
}

EmbeddingDataset EmbeddingDataset::subset(std::span<const std::size_t> rows) const
{
    std::vector<Sample> samples;
    samples.reserve(rows.size());
    EmbeddingMatrix vectors(static_cast<Eigen::Index>(rows.size()), dim());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= size())
            throw DataError("subset row " + std::to_string(rows[r]) + " out of range");
        samples.push_back(samples_[rows[r]]);
        vectors.row(static_cast<Eigen::Index>(r)) = vector(rows[r]);
    }
    return EmbeddingDataset(std::move(samples), std::move(vectors));
}

EmbeddingDataset EmbeddingDataset::select_subjects(std::span<const std::string> subject_ids) const
{
    const std::unordered_set<std::string> wanted(subject_ids.begin(), subject_ids.end());
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < size(); ++i)
        if (wanted.contains(samples_[i].subject_id))
            rows.push_back(i);
    return subset(rows);
}

bool operator==(const EmbeddingDataset& a, const EmbeddingDataset& b)
{
    if (a.samples_ != b.samples_ || a.dim() != b.dim())
        return false;
    // Bitwise comparison so that -0.0f and 0.0f are told apart.
    return std::memcmp(a.vectors_.data(), b.vectors_.data(),
                       sizeof(float) * static_cast<std::size_t>(a.vectors_.size())) == 0;
}

DatasetFormat parse_dataset_format(const std::string& name)
{
    if (name == "csv")
        return DatasetFormat::csv;
    if (name == "binary" || name == "bin")
        return DatasetFormat::binary;
    throw UsageError("unknown dataset format '" + name + "' (expected csv or binary)");
}

DatasetFormat dataset_format_from_path(const std::filesystem::path& path)
{
    const auto ext = path.extension().string();
    return (ext == ".fne" || ext == ".bin") ? DatasetFormat::binary : DatasetFormat::csv;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

bool skippable(std::string_view line)
{
    const auto t = trim(line);
    return t.empty() || t.front() == '#';
}

float parse_float(std::string_view text, std::size_t row, std::size_t column)
{
    auto t = trim(text);
    if (!t.empty() && t.front() == '+')
        t.remove_prefix(1);
    float value = 0.0f;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec == std::errc::result_out_of_range)
        throw DataError(row_label(row) + ": non-finite value in column v" + std::to_string(column));
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw DataError(row_label(row) + ": cannot parse '" + std::string(text) + "' as a real in column v" +
                        std::to_string(column));
    if (!std::isfinite(value))
        throw DataError(row_label(row) + ": non-finite value in column v" + std::to_string(column));
    return value;
}

void check_csv_token(const std::string& value, const char* what)
{
    if (value.find_first_of(",\r\n") != std::string::npos)
        throw DataError(std::string(what) + " '" + value + "' cannot be written to CSV (contains a separator)");
    if (trim(value).size() != value.size())
        throw DataError(std::string(what) + " '" + value + "' cannot be written to CSV (surrounding whitespace)");
}

}  // namespace

EmbeddingDataset read_csv_dataset(std::istream& in)
{
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!skippable(line)) {
            have_header = true;
            break;
        }
    }
    if (!have_header)
        throw DataError("empty file: no header line");

    const auto header = split_fields(line);
    if (header.size() < 3 || trim(header[0]) != "sample_id" || trim(header[1]) != "subject_id")
        throw DataError("header must start with 'sample_id,subject_id' followed by vector columns");

    std::vector<std::string> attr_names;
    std::size_t col = 2;
    for (; col < header.size(); ++col) {
        const auto name = trim(header[col]);
        if (!name.starts_with("attr:"))
            break;
        if (name.size() == 5)
            throw DataError("header: empty attribute name in column " + std::to_string(col + 1));
        attr_names.emplace_back(name.substr(5));
    }
    const std::size_t first_vector_col = col;
    const std::size_t dim = header.size() - first_vector_col;
    if (dim == 0)
        throw DataError("header declares no vector columns");
    for (std::size_t d = 0; d < dim; ++d) {
        if (trim(header[first_vector_col + d]) != "v" + std::to_string(d))
            throw DataError("header: expected column 'v" + std::to_string(d) + "', found '" +
                            std::string(trim(header[first_vector_col + d])) + "'");
    }
    const std::size_t expected_fields = first_vector_col + dim;

    std::vector<Sample> samples;
    std::vector<float> values;
    std::unordered_set<std::string> seen;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (skippable(line))
            continue;
        ++row;
        const auto fields = split_fields(line);
        if (fields.size() != expected_fields) {
            const long found = static_cast<long>(fields.size()) - static_cast<long>(first_vector_col);
            throw DataError(row_label(row) + ": dimension mismatch, header says dim=" + std::to_string(dim) +
                            " but row has " + std::to_string(std::max(found, 0L)) + " vector values");
        }
        Sample s;
        s.sample_id = std::string(trim(fields[0]));
        s.subject_id = std::string(trim(fields[1]));
        validate_token(s.sample_id, "sample_id", row);
        validate_token(s.subject_id, "subject_id", row);
        if (!seen.insert(s.sample_id).second)
            throw DataError(row_label(row) + ": duplicate sample_id '" + s.sample_id + "'");
        for (std::size_t a = 0; a < attr_names.size(); ++a) {
            const auto label = trim(fields[2 + a]);
            if (!label.empty())
                s.attributes.emplace(attr_names[a], std::string(label));
        }
        for (std::size_t d = 0; d < dim; ++d)
            values.push_back(parse_float(fields[first_vector_col + d], row, d));
        samples.push_back(std::move(s));
    }
    if (samples.empty())
        throw DataError("empty file: header present but no sample rows");

    EmbeddingMatrix vectors = Eigen::Map<const EmbeddingMatrix>(
        values.data(), static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(dim));
    return EmbeddingDataset(std::move(samples), std::move(vectors));
}

void write_csv_dataset(const EmbeddingDataset& dataset, std::ostream& out)
{
    std::set<std::string> attr_names;
    for (const auto& s : dataset.samples()) {
        check_csv_token(s.sample_id, "sample_id");
        check_csv_token(s.subject_id, "subject_id");
        if (s.sample_id.front() == '#')
            throw DataError("sample_id '" + s.sample_id + "' would be read back as a CSV comment");
        for (const auto& [name, label] : s.attributes) {
            check_csv_token(name, "attribute name");
            check_csv_token(label, "attribute label");
            attr_names.insert(name);
        }
    }

    out << "sample_id,subject_id";
    for (const auto& name : attr_names)
        out << ",attr:" << name;
    for (Eigen::Index d = 0; d < dataset.dim(); ++d)
        out << ",v" << d;
    out << '\n';

    std::array<char, 64> buf{};
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Sample& s = dataset.sample(i);
        out << s.sample_id << ',' << s.subject_id;
        for (const auto& name : attr_names) {
            out << ',';
            if (auto it = s.attributes.find(name); it != s.attributes.end())
                out << it->second;
        }
        const auto v = dataset.vector(i);
        for (Eigen::Index d = 0; d < dataset.dim(); ++d) {
            // Shortest representation that parses back to the identical float.
            const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v(d));
            out << ',' << std::string_view(buf.data(), static_cast<std::size_t>(res.ptr - buf.data()));
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Binary: "FNE1" | u32 dim | u64 count | per sample: str id, str subject,
// u16 n_attr, n_attr x (str key, str value), dim x f32. Strings are u32 length + bytes.
// All integers and floats little-endian.

namespace {

constexpr std::array<char, 4> kMagic{'F', 'N', 'E', '1'};

template <typename T>
void put_le(std::ostream& out, T value)
{
    std::array<unsigned char, sizeof(T)> bytes{};
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t b = 0; b < sizeof(T); ++b) {
        bytes[b] = static_cast<unsigned char>(u & 0xFFu);
        u = static_cast<U>(u >> 8);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void put_string(std::ostream& out, const std::string& s)
{
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class BinaryReader {
public:
    explicit BinaryReader(std::istream& in) : in_(in) {}

    template <typename T>
    T get(const char* what)
    {
        std::array<unsigned char, sizeof(T)> bytes{};
        read_raw(reinterpret_cast<char*>(bytes.data()), bytes.size(), what);
        std::make_unsigned_t<T> u = 0;
        for (std::size_t b = sizeof(T); b-- > 0;)
            u = static_cast<std::make_unsigned_t<T>>((u << 8) | bytes[b]);
        return static_cast<T>(u);
    }

    std::string get_string(const char* what)
    {
        const auto len = get<std::uint32_t>(what);
        std::string s(len, '\0');
        read_raw(s.data(), len, what);
        return s;
    }

    void read_raw(char* dst, std::size_t n, const char* what)
    {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw DataError(context_ + ": truncated binary dataset while reading " + what);
    }

    void set_context(std::string c) { context_ = std::move(c); }

private:
    std::istream& in_;
    std::string context_ = "header";
};

}  // namespace

void write_binary_dataset(const EmbeddingDataset& dataset, std::ostream& out)
{
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dataset.dim()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(dataset.size()));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Sample& s = dataset.sample(i);
        put_string(out, s.sample_id);
        put_string(out, s.subject_id);
        if (s.attributes.size() > 0xFFFFu)
            throw DataError("too many attributes for binary format");
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.attributes.size()));
        for (const auto& [name, label] : s.attributes) {
            put_string(out, name);
            put_string(out, label);
        }
        const auto v = dataset.vector(i);
        for (Eigen::Index d = 0; d < dataset.dim(); ++d)
            put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v(d)));
    }
}

EmbeddingDataset read_binary_dataset(std::istream& in)
{
    BinaryReader reader(in);
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() == 0)
        throw DataError("empty file");
    if (in.gcount() != 4 || magic != kMagic)
        throw DataError("not a binary embedding dataset (bad magic bytes)");
    const auto dim = reader.get<std::uint32_t>("dim");
    const auto count = reader.get<std::uint64_t>("sample count");
    if (dim == 0)
        throw DataError("header: dim must be positive");
    if (count == 0)
        throw DataError("empty file: no samples");

    std::vector<Sample> samples;
    std::vector<float> values;
    std::unordered_set<std::string> seen;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) + 1;
        reader.set_context(row_label(row));
        Sample s;
        s.sample_id = reader.get_string("sample_id");
        s.subject_id = reader.get_string("subject_id");
        validate_token(s.sample_id, "sample_id", row);
        validate_token(s.subject_id, "subject_id", row);
        if (!seen.insert(s.sample_id).second)
            throw DataError(row_label(row) + ": duplicate sample_id '" + s.sample_id + "'");
        const auto n_attr = reader.get<std::uint16_t>("attribute count");
        for (std::uint16_t a = 0; a < n_attr; ++a) {
            auto key = reader.get_string("attribute name");
            auto value = reader.get_string("attribute label");
            s.attributes.emplace(std::move(key), std::move(value));
        }
        for (std::uint32_t d = 0; d < dim; ++d) {
            const float f = std::bit_cast<float>(reader.get<std::uint32_t>("vector"));
            if (!std::isfinite(f))
                throw DataError(row_label(row) + ": non-finite value in column v" + std::to_string(d));
            values.push_back(f);
        }
        samples.push_back(std::move(s));
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw DataError("trailing bytes after last sample");

    EmbeddingMatrix vectors = Eigen::Map<const EmbeddingMatrix>(
        values.data(), static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(dim));
    return EmbeddingDataset(std::move(samples), std::move(vectors));
}

EmbeddingDataset load_dataset(const std::filesystem::path& path, DatasetFormat format)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open dataset file '" + path.string() + "'");
    try {
        return format == DatasetFormat::csv ? read_csv_dataset(in) : read_binary_dataset(in);
    } catch (const Error& e) {
        rethrow_with_context(e, path.string());
    }
}

void save_dataset(const EmbeddingDataset& dataset, const std::filesystem::path& path, DatasetFormat format)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot open '" + path.string() + "' for writing");
    if (format == DatasetFormat::csv)
        write_csv_dataset(dataset, out);
    else
        write_binary_dataset(dataset, out);
    if (!out)
        throw DataError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Folds

std::vector<FoldSplit> make_subject_disjoint_folds(const EmbeddingDataset& dataset, int n_folds,
                                                   std::uint64_t seed)
{
    if (n_folds < 2)
        throw UsageError("n_folds must be at least 2");
    std::vector<std::string> subjects = dataset.subject_ids();
    if (subjects.size() < static_cast<std::size_t>(n_folds))
        throw DataError("dataset has " + std::to_string(subjects.size()) + " subjects, fewer than " +
                        std::to_string(n_folds) + " folds");

    // Sorting first makes the split independent of row order in the file.
    std::sort(subjects.begin(), subjects.end());
    std::mt19937_64 rng(seed);
    std::shuffle(subjects.begin(), subjects.end(), rng);

    const auto folds = static_cast<std::size_t>(n_folds);
    std::vector<FoldSplit> splits(folds);
    for (std::size_t p = 0; p < subjects.size(); ++p) {
        for (std::size_t f = 0; f < folds; ++f) {
            auto& dst = (p % folds == f) ? splits[f].test_subject_ids : splits[f].train_subject_ids;
            dst.push_back(subjects[p]);
        }
    }
    for (auto& s : splits) {
        std::sort(s.train_subject_ids.begin(), s.train_subject_ids.end());
        std::sort(s.test_subject_ids.begin(), s.test_subject_ids.end());
    }
    return splits;
}

FoldData materialize_fold(const EmbeddingDataset& dataset, const FoldSplit& split)
{
    return FoldData{TrainSplit(dataset.select_subjects(split.train_subject_ids)),
                    dataset.select_subjects(split.test_subject_ids)};
}

}  // namespace fairnorm
