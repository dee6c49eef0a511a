import sys

sys.stderr.write("fatal: missing dependency\n")
sys.exit(3)
