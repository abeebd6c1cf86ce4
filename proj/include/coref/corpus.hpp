#pragma once

// CoNLL-2012 column-format documents and the token/span/partition data model
// shared by every other header. Parsing keeps raw rows verbatim so emission
// round-trips the consumed columns bit-exactly.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace coref {

class ConllFormatError : public std::runtime_error {
 public:
  ConllFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("conll format error at line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ChainError : public std::runtime_error {
 public:
  ChainError(long chain, const std::string& what)
      : std::runtime_error("coreference chain " + std::to_string(chain) + ": " + what),
        chain_(chain) {}
  long chain() const noexcept { return chain_; }

 private:
  long chain_;
};

class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Token span inside one sentence; start/end are inclusive token indices.
struct Span {
  int sentence = 0;
  int start = 0;
  int end = 0;
  auto operator<=>(const Span&) const = default;
};

// A clustering of spans. Chains are kept unordered; equality and hashing go
// through the normalized form.
struct Partition {
  std::vector<std::vector<Span>> chains;

  Partition normalized() const {
    Partition p;
    p.chains = chains;
    for (auto& chain : p.chains) {
      std::sort(chain.begin(), chain.end());
      chain.erase(std::unique(chain.begin(), chain.end()), chain.end());
    }
    std::erase_if(p.chains, [](const std::vector<Span>& c) { return c.empty(); });
    std::sort(p.chains.begin(), p.chains.end());
    return p;
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.normalized().chains == b.normalized().chains;
  }

  std::size_t mention_count() const {
    std::size_t n = 0;
    for (const auto& c : chains) n += c.size();
    return n;
  }
};

struct Token {
  std::string surface;
  std::string lemma;           // empty when the column is "-"
  std::string pos;
  std::string parse_fragment;  // constituent piece; '*' marks this leaf
  std::string ner = "-";       // reconstructed span label or "-"
  std::string speaker;         // empty when the column is "-"
  std::vector<std::string> columns;  // raw row, verbatim, for round trip
};

struct Sentence {
  std::vector<Token> tokens;
  int index = 0;
  std::vector<std::pair<Span, std::string>> ner_spans;
};

struct Document {
  std::string doc_id;
  int part_id = 0;
  std::vector<Sentence> sentences;
  std::optional<Partition> gold_chains;
};

namespace detail {

// Column layout of the *_conll format. Predicate-argument columns sit between
// kNer and the final coreference column.
inline constexpr std::size_t kColWord = 3;
inline constexpr std::size_t kColPos = 4;
inline constexpr std::size_t kColParse = 5;
inline constexpr std::size_t kColLemma = 6;
inline constexpr std::size_t kColSpeaker = 9;
inline constexpr std::size_t kColNer = 10;
inline constexpr std::size_t kMinColumns = 12;

inline std::vector<std::string> split_columns(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) cols.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return cols;
}

inline bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

// Items of a coreference cell: (id, open, close). Accepts both the official
// "|"-separated spelling and directly concatenated markers like "(0(1".
inline std::vector<std::tuple<long, bool, bool>> scan_coref_cell(const std::string& cell,
                                                                 std::size_t line) {
  std::vector<std::tuple<long, bool, bool>> items;
  if (cell == "-") return items;
  std::size_t i = 0;
  while (i < cell.size()) {
    if (cell[i] == '|') {
      ++i;
      continue;
    }
    bool open = false;
    if (cell[i] == '(') {
      open = true;
      ++i;
    }
    std::size_t d = i;
    while (d < cell.size() && std::isdigit(static_cast<unsigned char>(cell[d]))) ++d;
    if (d == i) throw ConllFormatError(line, "malformed coreference cell '" + cell + "'");
    long id = std::stol(cell.substr(i, d - i));
    i = d;
    bool close = false;
    if (i < cell.size() && cell[i] == ')') {
      close = true;
      ++i;
    }
    if (!open && !close)
      throw ConllFormatError(line, "malformed coreference cell '" + cell + "'");
    items.emplace_back(id, open, close);
  }
  return items;
}

struct OpenNer {
  std::string label;
  int start = 0;
};

}  // namespace detail

// Parses a stream of "#begin document" blocks into Documents. Gold chains are
// reconstructed from the final column; a document whose coreference cells are
// all "-" gets no gold_chains.
inline std::vector<Document> parse_conll(std::istream& in) {
  using namespace detail;
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;

  Document doc;
  bool in_doc = false;
  Sentence sentence;
  std::size_t sentence_cols = 0;
  std::optional<OpenNer> open_ner;
  bool saw_coref_marker = false;
  std::unordered_map<long, std::vector<int>> open_chains;  // id -> start token stack
  std::unordered_map<long, std::vector<Span>> chains;

  auto close_sentence = [&](std::size_t at_line) {
    if (sentence.tokens.empty()) return;
    if (open_ner)
      throw ConllFormatError(at_line, "named-entity span '" + open_ner->label +
                                          "' left open at sentence end");
    for (const auto& [id, starts] : open_chains)
      if (!starts.empty())
        throw ChainError(id, "mention left open at sentence end (missing '" +
                                 std::to_string(id) + ")')");
    sentence.index = static_cast<int>(doc.sentences.size());
    doc.sentences.push_back(std::move(sentence));
    sentence = Sentence{};
    sentence_cols = 0;
  };

  auto finish_document = [&](std::size_t at_line) {
    close_sentence(at_line);
    if (saw_coref_marker) {
      Partition p;
      std::vector<long> ids;
      ids.reserve(chains.size());
      for (const auto& [id, spans] : chains) ids.push_back(id);
      std::sort(ids.begin(), ids.end());
      std::unordered_set<std::string> seen;  // disjointness across chains
      for (long id : ids) {
        auto spans = chains[id];
        std::sort(spans.begin(), spans.end());
        spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
        for (const Span& s : spans) {
          std::string key = std::to_string(s.sentence) + ":" + std::to_string(s.start) + ":" +
                            std::to_string(s.end);
          if (!seen.insert(key).second)
            throw ChainError(id, "span appears in more than one chain");
        }
        p.chains.push_back(std::move(spans));
      }
      doc.gold_chains = std::move(p);
    }
    docs.push_back(std::move(doc));
    doc = Document{};
    chains.clear();
    open_chains.clear();
    saw_coref_marker = false;
    in_doc = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    if (line.rfind("#begin document", 0) == 0) {
      if (in_doc) throw ConllFormatError(line_no, "nested #begin document");
      auto lparen = line.find('(');
      auto rparen = line.rfind(')');
      auto part_pos = line.rfind("; part ");
      if (lparen == std::string::npos || rparen == std::string::npos ||
          part_pos == std::string::npos || rparen < lparen)
        throw ConllFormatError(line_no, "malformed #begin document directive");
      doc.doc_id = line.substr(lparen + 1, rparen - lparen - 1);
      try {
        doc.part_id = std::stoi(line.substr(part_pos + 7));
      } catch (const std::exception&) {
        throw ConllFormatError(line_no, "malformed part number in #begin document");
      }
      in_doc = true;
      continue;
    }
    if (line.rfind("#end document", 0) == 0) {
      if (!in_doc) throw ConllFormatError(line_no, "#end document without #begin");
      finish_document(line_no);
      continue;
    }
    if (!in_doc) {
      if (is_blank(line) || line[0] == '#') continue;
      throw ConllFormatError(line_no, "token row outside #begin/#end document");
    }
    if (is_blank(line)) {
      close_sentence(line_no);
      continue;
    }

    auto cols = split_columns(line);
    if (cols.size() < kMinColumns)
      throw ConllFormatError(line_no, "row has " + std::to_string(cols.size()) +
                                          " columns, at least " + std::to_string(kMinColumns) +
                                          " required");
    if (sentence.tokens.empty()) {
      sentence_cols = cols.size();
    } else if (cols.size() != sentence_cols) {
      throw ConllFormatError(line_no, "row has " + std::to_string(cols.size()) +
                                          " columns, sentence began with " +
                                          std::to_string(sentence_cols));
    }

    int tok_idx = static_cast<int>(sentence.tokens.size());
    int sent_idx = static_cast<int>(doc.sentences.size());

    Token tok;
    tok.surface = cols[kColWord];
    tok.pos = cols[kColPos];
    tok.parse_fragment = cols[kColParse];
    tok.lemma = cols[kColLemma] == "-" ? "" : cols[kColLemma];
    tok.speaker = cols[kColSpeaker] == "-" ? "" : cols[kColSpeaker];
    if (tok.surface.empty()) throw ConllFormatError(line_no, "empty word column");

    // Named-entity column: "(TAG*", "*)", "(TAG)" or "*".
    {
      const std::string& cell = cols[kColNer];
      if (cell == "*" || cell == "-") {
        // outside or continuation
      } else if (cell.size() > 2 && cell.front() == '(' && cell.back() == '*') {
        if (open_ner) throw ConllFormatError(line_no, "nested named-entity span");
        open_ner = OpenNer{cell.substr(1, cell.size() - 2), tok_idx};
      } else if (cell == "*)") {
        if (!open_ner) throw ConllFormatError(line_no, "named-entity close without open");
        sentence.ner_spans.push_back(
            {Span{sent_idx, open_ner->start, tok_idx}, open_ner->label});
        open_ner.reset();
      } else if (cell.size() > 2 && cell.front() == '(' && cell.back() == ')') {
        sentence.ner_spans.push_back(
            {Span{sent_idx, tok_idx, tok_idx}, cell.substr(1, cell.size() - 2)});
      } else {
        throw ConllFormatError(line_no, "malformed named-entity cell '" + cell + "'");
      }
    }

    // Coreference column (always the last one).
    for (auto [id, open, close] : scan_coref_cell(cols.back(), line_no)) {
      saw_coref_marker = true;
      if (open && close) {
        chains[id].push_back(Span{sent_idx, tok_idx, tok_idx});
      } else if (open) {
        open_chains[id].push_back(tok_idx);
      } else {
        auto& starts = open_chains[id];
        if (starts.empty())
          throw ChainError(id, "close marker without matching open");
        chains[id].push_back(Span{sent_idx, starts.back(), tok_idx});
        starts.pop_back();
      }
    }

    tok.columns = std::move(cols);
    sentence.tokens.push_back(std::move(tok));
  }
  if (in_doc) throw ConllFormatError(line_no, "missing #end document");

  // Fill in per-token NER labels from the reconstructed spans.
  for (auto& d : docs)
    for (auto& s : d.sentences)
      for (const auto& [span, label] : s.ner_spans)
        for (int t = span.start; t <= span.end; ++t) s.tokens[t].ner = label;

  return docs;
}

inline std::vector<Document> parse_conll_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_conll(in);
}

namespace detail {

inline void check_span_in_doc(const Document& doc, const Span& s) {
  if (s.sentence < 0 || s.sentence >= static_cast<int>(doc.sentences.size()) || s.start < 0 ||
      s.end < s.start ||
      s.end >= static_cast<int>(doc.sentences[s.sentence].tokens.size()))
    throw std::out_of_range("span (" + std::to_string(s.sentence) + "," +
                            std::to_string(s.start) + "," + std::to_string(s.end) +
                            ") outside document " + doc.doc_id);
}

inline std::string ner_cell(const Sentence& sent, int tok) {
  for (const auto& [span, label] : sent.ner_spans) {
    if (span.start == tok && span.end == tok) return "(" + label + ")";
    if (span.start == tok) return "(" + label + "*";
    if (span.end == tok) return "*)";
  }
  return "*";
}

}  // namespace detail

// Writes doc with the given partition in the coreference column. Chains are
// renumbered 0..n-1 in order of their earliest span.
inline void emit_conll(const Document& doc, const Partition& partition, std::ostream& out) {
  using namespace detail;
  Partition part = partition.normalized();
  for (const auto& chain : part.chains)
    for (const auto& span : chain) check_span_in_doc(doc, span);
  // normalized() sorts chains by first span, which is first-mention order
  struct Marker {
    long id;
    Span span;
  };
  // per (sentence, token): markers starting / single / ending there
  std::unordered_map<long long, std::vector<Marker>> starts, singles, ends;
  auto key = [](int sent, int tok) { return (static_cast<long long>(sent) << 32) | tok; };
  for (std::size_t c = 0; c < part.chains.size(); ++c) {
    for (const Span& s : part.chains[c]) {
      Marker m{static_cast<long>(c), s};
      if (s.start == s.end)
        singles[key(s.sentence, s.start)].push_back(m);
      else {
        starts[key(s.sentence, s.start)].push_back(m);
        ends[key(s.sentence, s.end)].push_back(m);
      }
    }
  }

  char part_buf[8];
  std::snprintf(part_buf, sizeof part_buf, "%03d", doc.part_id);
  out << "#begin document (" << doc.doc_id << "); part " << part_buf << "\n";
  for (const auto& sent : doc.sentences) {
    for (std::size_t t = 0; t < sent.tokens.size(); ++t) {
      const Token& tok = sent.tokens[t];
      std::string cell;
      auto append = [&cell](const std::string& item) {
        if (!cell.empty()) cell += '|';
        cell += item;
      };
      if (auto it = starts.find(key(sent.index, static_cast<int>(t))); it != starts.end()) {
        auto ms = it->second;  // outermost first
        std::sort(ms.begin(), ms.end(), [](const Marker& a, const Marker& b) {
          return a.span.end != b.span.end ? a.span.end > b.span.end : a.id < b.id;
        });
        for (const auto& m : ms) append("(" + std::to_string(m.id));
      }
      if (auto it = singles.find(key(sent.index, static_cast<int>(t))); it != singles.end()) {
        auto ms = it->second;
        std::sort(ms.begin(), ms.end(),
                  [](const Marker& a, const Marker& b) { return a.id < b.id; });
        for (const auto& m : ms) append("(" + std::to_string(m.id) + ")");
      }
      if (auto it = ends.find(key(sent.index, static_cast<int>(t))); it != ends.end()) {
        auto ms = it->second;  // innermost first
        std::sort(ms.begin(), ms.end(), [](const Marker& a, const Marker& b) {
          return a.span.start != b.span.start ? a.span.start > b.span.start : a.id < b.id;
        });
        for (const auto& m : ms) append(std::to_string(m.id) + ")");
      }
      if (cell.empty()) cell = "-";

      if (!tok.columns.empty()) {
        for (std::size_t c = 0; c + 1 < tok.columns.size(); ++c) out << tok.columns[c] << " ";
        out << cell << "\n";
      } else {
        // Document built in memory: synthesize the minimal 12-column row.
        out << doc.doc_id << " " << doc.part_id << " " << t << " " << tok.surface << " "
            << tok.pos << " " << tok.parse_fragment << " "
            << (tok.lemma.empty() ? "-" : tok.lemma) << " - - "
            << (tok.speaker.empty() ? "-" : tok.speaker) << " " << ner_cell(sent, t) << " "
            << cell << "\n";
      }
    }
    out << "\n";
  }
  out << "#end document\n";
}

inline std::string emit_conll_string(const Document& doc, const Partition& partition) {
  std::ostringstream out;
  emit_conll(doc, partition, out);
  return out.str();
}

struct CorpusLoadOptions {
  bool filter_short = false;  // drop documents with fewer than min_sentences
  int min_sentences = 3;
  bool dedup = false;  // drop exact duplicates of the full token surface sequence
};

struct Corpus {
  std::vector<Document> documents;
  std::size_t skipped_short = 0;
  std::size_t skipped_duplicate = 0;
};

inline Corpus load_corpus(const std::vector<std::filesystem::path>& paths,
                          const CorpusLoadOptions& opts = {}) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read corpus file: " + path.string());
    for (auto& doc : parse_conll(in)) {
      if (opts.filter_short &&
          static_cast<int>(doc.sentences.size()) < opts.min_sentences) {
        ++corpus.skipped_short;
        continue;
      }
      if (opts.dedup) {
        std::string fingerprint;
        for (const auto& s : doc.sentences)
          for (const auto& t : s.tokens) {
            fingerprint += t.surface;
            fingerprint += '\x1f';
          }
        if (!seen.insert(std::move(fingerprint)).second) {
          ++corpus.skipped_duplicate;
          continue;
        }
      }
      corpus.documents.push_back(std::move(doc));
    }
  }
  return corpus;
}

}  // namespace coref
