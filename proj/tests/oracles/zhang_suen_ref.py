"""Textbook Zhang-Suen thinning, used to freeze expected skeletons for tests."""
import numpy as np


def zhang_suen(img):
    img = np.pad(np.asarray(img, dtype=np.uint8), 1)
    changed = True
    while changed:
        changed = False
        for step in (0, 1):
            remove = []
            for y in range(1, img.shape[0] - 1):
                for x in range(1, img.shape[1] - 1):
                    if not img[y, x]:
                        continue
                    p2, p3, p4 = img[y - 1, x], img[y - 1, x + 1], img[y, x + 1]
                    p5, p6, p7 = img[y + 1, x + 1], img[y + 1, x], img[y + 1, x - 1]
                    p8, p9 = img[y, x - 1], img[y - 1, x - 1]
                    ring = [p2, p3, p4, p5, p6, p7, p8, p9, p2]
                    b = sum(ring[:8])
                    a = sum(1 for i in range(8) if ring[i] == 0 and ring[i + 1] == 1)
                    if not (2 <= b <= 6 and a == 1):
                        continue
                    if step == 0 and (p2 * p4 * p6 == 0) and (p4 * p6 * p8 == 0):
                        remove.append((y, x))
                    if step == 1 and (p2 * p4 * p8 == 0) and (p2 * p6 * p8 == 0):
                        remove.append((y, x))
            for y, x in remove:
                img[y, x] = 0
            changed = changed or bool(remove)
    return img[1:-1, 1:-1]


if __name__ == "__main__":
    rect = np.ones((3, 5), np.uint8)  # 3 rows, 5 columns
    print(zhang_suen(rect))
    blob = np.zeros((7, 9), np.uint8)
    blob[1:6, 1:8] = 1
    blob[3, 0] = 1
    print(zhang_suen(blob))
