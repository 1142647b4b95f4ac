"""Stand-in external tagger speaking the line protocol.

usage: fake_tagger.py MODE
  o        every token O
  caps     capitalized tokens tagged B-person (or I-person when following one)
  short    one tag fewer than tokens
  echo     echoes a different surface for the first token
  sleep    never answers
  bad      emits a malformed tag
  crash    exits before answering the second document
"""

import sys
import time


def answer(mode, tokens, n_doc):
    if mode == "sleep":
        time.sleep(3600)
    if mode == "crash" and n_doc > 0:
        sys.exit(3)
    out = []
    prev = False
    for i, tok in enumerate(tokens):
        tag = "O"
        if mode == "caps" and tok[:1].isupper():
            tag = "I-person" if prev else "B-person"
        if mode == "bad" and i == 0:
            tag = "X-person"
        prev = tag != "O"
        surface = "zzz" if mode == "echo" and i == 0 else tok
        out.append(f"{surface}\t{tag}\n")
    if mode == "short" and out:
        out.pop()
    return "".join(out) + "\n"


def main():
    mode = sys.argv[1]
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    tokens = []
    n_doc = 0
    for raw in iter(stdin.readline, b""):
        line = raw.decode("utf-8").rstrip("\n")
        if line:
            tokens.append(line)
            continue
        stdout.write(answer(mode, tokens, n_doc).encode("utf-8"))
        stdout.flush()
        tokens = []
        n_doc += 1


if __name__ == "__main__":
    main()
