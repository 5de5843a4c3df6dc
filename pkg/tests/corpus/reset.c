extern int __VERIFIER_nondet_int(void);

int level = 0;

void reset(void) {
  level = 0;
}

void raise_level(int by) {
  if (by <= 0)
    return;
  level = level + by;
}

int main() {
  int a = __VERIFIER_nondet_int();
  raise_level(a);
  reset();
  assert(level == 0);
  return 0;
}
